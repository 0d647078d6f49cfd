#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qflow/conformal.hpp"

using namespace qflow;

namespace {

// Constant cylinder orbit, handy as a closed-form solution.
DelaunaySolution cylinder_orbit(int n) {
  DelaunaySolution sol;
  sol.params = make_params(n);
  sol.eps = sol.params.v_cyl;
  sol.period = 1.0;
  sol.step = 1.0 / 64;
  sol.energy = sol.params.H_cyl;
  for (int i = 0; i <= 64; ++i)
    sol.samples.push_back({i * sol.step, sol.params.v_cyl, 0, 0, 0});
  return sol;
}

const DelaunaySolution& sol52() {
  static const DelaunaySolution s = shoot_delaunay(make_params(5), 0.2);
  return s;
}

}  // namespace

TEST_CASE("cylinder-to-ball transport") {
  const auto& sol = sol52();
  SECTION("unit sphere value is the necksize when R = 1") {
    CHECK(u_from_v(sol, 1.0, {1, 0, 0, 0, 0}) ==
          Catch::Approx(0.2).margin(1e-12));
  }
  SECTION("cylinder solution transports to v_cyl |x|^{(4-n)/2}") {
    const auto cyl = cylinder_orbit(6);
    for (double rho : {0.3, 0.7, 1.5}) {
      CHECK(u_from_v(cyl, 1.0, {rho, 0, 0, 0, 0, 0}) ==
            Catch::Approx(cyl.params.v_cyl * std::pow(rho, -1.0))
                .epsilon(1e-12));
    }
  }
  SECTION("round trip recovers v") {
    for (double rho : {0.2, 0.5, 0.9}) {
      const double u = u_radial(sol, 2.0, rho);
      const double v = evaluate(sol, -std::log(rho) + std::log(2.0)).v;
      CHECK(std::pow(rho, (sol.params.n - 4.0) / 2) * u ==
            Catch::Approx(v).epsilon(1e-13));
    }
  }
  SECTION("x = 0 rejected") {
    CHECK_THROWS_AS(u_from_v(sol, 1.0, {0, 0, 0, 0, 0}), DomainError);
  }
  SECTION("radial derivatives match finite differences") {
    const double rho = 0.62, R = 1.3, h = 1e-4;
    const auto d = u_radial_derivs(sol, R, rho);
    CHECK(d[0] == Catch::Approx(u_radial(sol, R, rho)).epsilon(1e-13));
    const double fd1 =
        (u_radial(sol, R, rho + h) - u_radial(sol, R, rho - h)) / (2 * h);
    const double fd2 =
        (u_radial(sol, R, rho + h) - 2 * d[0] + u_radial(sol, R, rho - h)) /
        (h * h);
    CHECK(d[1] == Catch::Approx(fd1).margin(1e-6));
    CHECK(d[2] == Catch::Approx(fd2).margin(1e-4));
  }
}

TEST_CASE("translated family") {
  const auto& sol = sol52();
  SECTION("a = 0 reduces to the axial family") {
    ConformalFactor f{sol, 0.7, {0, 0, 0, 0, 0}};
    for (double rho : {0.3, 0.8})
      CHECK(u_family(f, {rho, 0, 0, 0, 0}) ==
            u_from_v(sol, 0.7, {rho, 0, 0, 0, 0}));
  }
  SECTION("independent high-precision evaluation") {
    ShootOptions tight;
    tight.classify_step = 2e-4;
    tight.fine_step = 2e-5;
    tight.sample_step = 2e-4;
    const auto precise = shoot_delaunay(make_params(5), 0.2, 1e-13, tight);
    ConformalFactor f{sol, 1.0, {0.1, 0, 0, 0, 0}};
    ConformalFactor g{precise, 1.0, {0.1, 0, 0, 0, 0}};
    const VecN x = {0.5, 0, 0, 0, 0};
    CHECK(u_family(f, x) == Catch::Approx(u_family(g, x)).epsilon(1e-9));
  }
  SECTION("Kelvin consistency of the axial family") {
    // K(u_{eps,R}) = u_{eps,1/R} on a radial grid.
    const double R = 1.7;
    auto uR = [&](const VecN& y) { return u_from_v(sol, R, y); };
    for (double rho : {0.4, 0.8, 1.3, 2.2}) {
      const VecN x = {rho, 0, 0, 0, 0};
      CHECK(kelvin(uR, 5, x) ==
            Catch::Approx(u_from_v(sol, 1 / R, x)).epsilon(1e-11));
    }
  }
  SECTION("singular points rejected") {
    ConformalFactor f{sol, 1.0, {0.5, 0, 0, 0, 0}};
    CHECK_THROWS_AS(u_family(f, {0, 0, 0, 0, 0}), DomainError);
    // x = a/|a|^2 = (2, 0, 0, 0, 0) is the second singular point.
    CHECK_THROWS_AS(u_family(f, {2, 0, 0, 0, 0}), DomainError);
  }
}

TEST_CASE("Kelvin transform") {
  SECTION("fundamental-type power maps to 1") {
    const int n = 6;
    auto u = [&](const VecN& y) { return std::pow(norm2(y), 4.0 - n); };
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int i = 0; i < 30; ++i) {
      VecN x(6);
      for (auto& c : x) c = unif(rng);
      if (norm2(x) < 0.1) continue;
      CHECK(kelvin(u, n, x) == Catch::Approx(1.0).epsilon(1e-12));
    }
  }
  SECTION("involution") {
    const int n = 5;
    const auto& sol = sol52();
    auto u = [&](const VecN& y) { return u_from_v(sol, 1.3, y); };
    auto ku = [&](const VecN& y) { return kelvin(u, n, y); };
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> unif(0.2, 2.0);
    for (int i = 0; i < 30; ++i) {
      VecN x = {unif(rng), unif(rng), 0, 0, 0};
      CHECK(kelvin(ku, n, x) == Catch::Approx(u(x)).epsilon(1e-11));
    }
  }
  SECTION("preserves the flat equation") {
    const auto& sol = sol52();
    auto u = [&](const VecN& y) { return u_from_v(sol, 2.0, y); };
    const auto grid = log_radial_grid(0.4, 0.9, 100);
    std::vector<double> ku(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      ku[i] = kelvin(u, 5, {grid[i], 0, 0, 0, 0});
    const auto res = flat_residual(grid, ku, sol.params);
    double sup = 0;
    for (double v : res.residual) sup = std::max(sup, std::abs(v));
    CHECK(sup < 1e-4);
  }
}

TEST_CASE("radial bi-Laplacian stencils") {
  const int n = 5;
  const auto grid = log_radial_grid(0.5, 2.0, 64);
  SECTION("|x|^2 is biharmonic with Laplacian 2n") {
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) u[i] = grid[i] * grid[i];
    const auto ops = radial_bilaplacian(grid, u, n);
    for (std::size_t i = 0; i < ops.rho.size(); ++i) {
      CHECK(ops.lap[i] == Catch::Approx(2.0 * n).epsilon(1e-6));
      CHECK(std::abs(ops.bilap[i]) < 1e-6);
    }
  }
  SECTION("|x|^{4-n} is biharmonic away from the origin") {
    const auto dense = log_radial_grid(0.5, 2.0, 160);
    std::vector<double> u(dense.size());
    for (std::size_t i = 0; i < dense.size(); ++i)
      u[i] = std::pow(dense[i], 4.0 - n);
    const auto ops = radial_bilaplacian(dense, u, n);
    for (double b : ops.bilap) CHECK(std::abs(b) < 5e-5);
  }
  SECTION("general power law") {
    const double m = 1.6;
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) u[i] = std::pow(grid[i], m);
    const auto ops = radial_bilaplacian(grid, u, n);
    for (std::size_t i = 0; i < ops.rho.size(); ++i) {
      const double expect = m * (m + n - 2) * (m - 2) * (m + n - 4) *
                            std::pow(ops.rho[i], m - 4);
      CHECK(ops.bilap[i] == Catch::Approx(expect).margin(1e-5));
    }
  }
  SECTION("grid too small") {
    const auto tiny = log_radial_grid(0.5, 1.0, 6);
    std::vector<double> u(tiny.size(), 1.0);
    CHECK_THROWS_AS(radial_bilaplacian(tiny, u, n), DomainError);
  }
}

TEST_CASE("flat equation residuals") {
  SECTION("standard bubble for n in {5, 6, 8}") {
    // Grid chosen where fourth-order truncation dominates the eps/h^4
    // roundoff floor; the 1e-8-level residual statement belongs to the
    // closed-form substitution checked in the acceptance suite.
    for (int n : {5, 6, 8}) {
      const auto p = make_params(n);
      const auto grid = log_radial_grid(0.5, 3.0, 200);
      std::vector<double> u(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i)
        u[i] = std::pow((1 + grid[i] * grid[i]) / 2, (4.0 - n) / 2);
      const auto res = flat_residual(grid, u, p);
      double sup = 0;
      for (double v : res.residual) sup = std::max(sup, std::abs(v));
      INFO("n = " << n << " bubble residual " << sup);
      CHECK(sup < 1e-4);
    }
  }
  SECTION("transported cylinder solution") {
    const auto cyl = cylinder_orbit(5);
    const auto grid = log_radial_grid(0.3, 1.0, 128);
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      u[i] = u_radial(cyl, 1.0, grid[i]);
    const auto res = flat_residual(grid, u, cyl.params);
    for (double v : res.residual) CHECK(std::abs(v) < 1e-3);
  }
  SECTION("bubble residual converges at the stencil order") {
    const auto p = make_params(5);
    auto sup_at = [&](std::size_t pts) {
      const auto grid = log_radial_grid(0.5, 3.0, pts);
      std::vector<double> u(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i)
        u[i] = std::pow((1 + grid[i] * grid[i]) / 2, (4.0 - 5) / 2);
      const auto res = flat_residual(grid, u, p);
      double sup = 0;
      for (double v : res.residual) sup = std::max(sup, std::abs(v));
      return sup;
    };
    CHECK(sup_at(96) < sup_at(48) / 8);
  }
  SECTION("Delaunay residual shrinks under refinement") {
    const auto& sol = sol52();
    auto sup_residual = [&](std::size_t pts) {
      const auto grid = log_radial_grid(0.3, 0.9, pts);
      std::vector<double> u(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i)
        u[i] = u_radial(sol, 1.0, grid[i]);
      const auto res = flat_residual(grid, u, sol.params);
      double sup = 0;
      for (double v : res.residual) sup = std::max(sup, std::abs(v));
      return sup;
    };
    const double coarse = sup_residual(50);
    const double fine = sup_residual(100);
    CHECK(fine < coarse / 8);
  }
  SECTION("positivity required") {
    const auto p = make_params(5);
    const auto grid = log_radial_grid(0.5, 1.0, 32);
    std::vector<double> u(grid.size(), -1.0);
    CHECK_THROWS_AS(flat_residual(grid, u, p), DomainError);
  }
}

TEST_CASE("Euclidean expansion of the axial family") {
  const auto& sol = sol52();
  SECTION("remainder vanishes at the unit sphere when R = 1") {
    const auto rep = expansion_check_u(sol, 1.0, {1.0});
    CHECK(rep.sup < 1e-12);
  }
  SECTION("bounded by the pinned constant across the eps grid") {
    // Pinned from the first run; +10% regression headroom.
    const double pinned = 0.004061;
    double fitted = 0;
    for (double eps : {0.3, 0.2, 0.1}) {
      const auto s = shoot_delaunay(make_params(5), eps);
      std::vector<double> grid;
      for (int i = 1; i <= 40; ++i) grid.push_back(i / 40.0);
      fitted = std::max(fitted, expansion_check_u(s, 1.0, grid).sup);
    }
    INFO("fitted expansion constant = " << fitted);
    CHECK(fitted <= pinned * 1.10);
  }
  SECTION("scale invariance under co-scaled grids") {
    std::vector<double> grid1, grid2;
    for (int i = 1; i <= 20; ++i) {
      grid1.push_back(i / 20.0);
      grid2.push_back(0.35 * i / 20.0);
    }
    const auto rep1 = expansion_check_u(sol, 1.0, grid1);
    const auto rep2 = expansion_check_u(sol, 0.35, grid2);
    for (std::size_t i = 0; i < rep1.normalized.size(); ++i)
      CHECK(rep1.normalized[i] ==
            Catch::Approx(rep2.normalized[i]).margin(2e-9));
  }
  SECTION("grid outside (0, R] rejected") {
    CHECK_THROWS_AS(expansion_check_u(sol, 0.5, {0.7}), DomainError);
  }
}

TEST_CASE("translation expansion") {
  const auto& sol = sol52();
  SECTION("a = 0 has zero remainder") {
    const VecN a = {0, 0, 0, 0, 0};
    const auto rep = translation_expansion_check(
        sol, 1.0, a, {{0.5, 0, 0, 0, 0}, {0.2, 0.1, 0, 0, 0}});
    CHECK(rep.sup_interior == 0.0);
  }
  SECTION("pinned remainder at the reference configuration") {
    // n = 5, eps = 0.2, R = 0.1, |x| = 0.5, |a| = 0.05.
    const VecN a = {0.05, 0, 0, 0, 0};
    const auto rep =
        translation_expansion_check(sol, 0.1, a, {{0.5, 0, 0, 0, 0}});
    INFO("interior " << rep.sup_interior << " exterior " << rep.sup_exterior);
    CHECK(rep.exterior_seen);
    CHECK(rep.sup_interior <= 0.2289 * 1.10);  // pinned first-run value
    CHECK(rep.sup_exterior <= 0.5118 * 1.10);  // pinned first-run value
  }
  SECTION("linear term cancels in the symmetrized difference") {
    const VecN a = {0.04, 0.02, 0, 0, 0};
    VecN neg = a;
    for (auto& c : neg) c = -c;
    ConformalFactor fp{sol, 1.0, a}, fm{sol, 1.0, neg};
    for (const VecN x : {VecN{0.5, 0, 0, 0, 0}, VecN{0.2, 0.3, 0, 0, 0}}) {
      const double r = norm2(x);
      const auto du = u_radial_derivs(sol, 1.0, r);
      const double dot =
          std::inner_product(a.begin(), a.end(), x.begin(), 0.0);
      const double linear = std::abs(((5 - 4) * du[0] + r * du[1]) * dot);
      const double sym =
          std::abs(u_family(fp, x) + u_family(fm, x) - 2 * du[0]) / 2;
      CHECK(sym < linear / 5);  // second order in a, not first
    }
  }
  SECTION("remainders scale quadratically in |a|") {
    std::vector<double> mags = {0.02, 0.04, 0.08};
    std::vector<double> sups;
    for (double m : mags) {
      const VecN a = {m, 0, 0, 0, 0};
      sups.push_back(
          translation_expansion_check(
              sol, 1.0, a, {{0.5, 0, 0, 0, 0}, {0.3, 0.2, 0, 0, 0}})
              .sup_interior);
    }
    // sup_interior is |a|^2-normalized already; the unnormalized remainder
    // must show log-log slope 2 +- 0.1.
    for (std::size_t i = 1; i < mags.size(); ++i) {
      const double slope =
          std::log((sups[i] * mags[i] * mags[i]) /
                   (sups[i - 1] * mags[i - 1] * mags[i - 1])) /
          std::log(mags[i] / mags[i - 1]);
      CHECK(slope == Catch::Approx(2.0).margin(0.1));
    }
  }
  SECTION("|a||x| >= r0 rejected") {
    const VecN a = {1.0, 0, 0, 0, 0};
    CHECK_THROWS_AS(
        translation_expansion_check(sol, 1.0, a, {{0.5, 0, 0, 0, 0}}),
        DomainError);
  }
}

TEST_CASE("biharmonic auxiliary function") {
  const auto& sol = sol52();
  const double R = 0.1;
  SECTION("biharmonic and vanishing at the origin") {
    const auto grid = log_radial_grid(0.2, 1.0, 200);
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      u[i] = upsilon(sol, R, grid[i]);
    const auto ops = radial_bilaplacian(grid, u, sol.params.n);
    for (double b : ops.bilap) CHECK(std::abs(b) < 1e-6);
    CHECK(upsilon(sol, R, 0.0) == 0.0);
  }
  SECTION("cancels the quadratic growth term of the expansion") {
    // u + Upsilon against the model without its |x|^2 term equals the full
    // check exactly: Upsilon is minus that model term.
    const double n = sol.params.n;
    for (double rho : {0.02, 0.05, 0.09}) {
      const double full_model =
          sol.alpha / 2 *
              (std::pow(R, (4 - n) / 2) +
               std::pow(R, (n - 4) / 2) * std::pow(rho, 4 - n)) +
          sol.beta / 2 * (std::pow(R, -n / 2) * rho * rho +
                          std::pow(R, n / 2) * std::pow(rho, 2 - n));
      const double reduced_model =
          full_model - sol.beta / 2 * std::pow(R, -n / 2) * rho * rho;
      const double lhs = u_radial(sol, R, rho) + upsilon(sol, R, rho);
      const double rhs = u_radial(sol, R, rho);
      CHECK(lhs - reduced_model ==
            Catch::Approx(rhs - full_model).margin(1e-14));
    }
  }
}
