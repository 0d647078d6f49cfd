#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "qflow/io.hpp"

using namespace qflow;

namespace {

const DelaunaySolution& sol52() {
  static const DelaunaySolution s = shoot_delaunay(make_params(5), 0.2);
  return s;
}

struct TempFile {
  std::string path;
  TempFile() {
    path = (std::filesystem::temp_directory_path() /
            ("qflow_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++)))
               .string();
  }
  ~TempFile() { std::filesystem::remove(path); }
  static int counter;
};
int TempFile::counter = 0;

}  // namespace

TEST_CASE("dimension parameters serialize") {
  const auto j = to_json(make_params(5));
  CHECK(j["A"] == 6.5);
  CHECK(j["n"] == 5);
  CHECK(j["schema"] == kSchemaVersion);
}

TEST_CASE("solution record round trip") {
  const auto& sol = sol52();
  const double fine_step = ShootOptions{}.fine_step;
  const json j = to_json(sol, fine_step);
  SECTION("record carries the shooting data, not the samples") {
    CHECK(j.contains("q"));
    CHECK(j.contains("period"));
    CHECK(j.contains("alpha"));
    CHECK(!j.contains("samples"));
  }
  SECTION("reconstruction is bit-exact") {
    const auto back = solution_from_json(j);
    CHECK(back.q == sol.q);
    CHECK(back.period == sol.period);
    CHECK(back.step == sol.step);
    REQUIRE(back.samples.size() == sol.samples.size());
    for (std::size_t i = 0; i < sol.samples.size(); i += 97) {
      CHECK(back.samples[i].v == sol.samples[i].v);
      CHECK(back.samples[i].v2 == sol.samples[i].v2);
    }
    CHECK(to_json(back, fine_step).dump() == j.dump());
  }
  SECTION("schema version is enforced") {
    json stale = j;
    stale["schema"] = "qflow-0";
    CHECK_THROWS_AS(solution_from_json(stale), IoError);
  }
}

TEST_CASE("solution cache") {
  const auto& sol = sol52();
  const auto p = make_params(5);
  TempFile tmp;
  SolutionCache cache(tmp.path);
  const ShootOptions opt;
  SECTION("miss, then bit-identical hit") {
    bool hit = true;
    const auto first = shoot_cached(p, 0.2, 1e-12, opt, &cache, &hit);
    CHECK(!hit);
    const auto second = shoot_cached(p, 0.2, 1e-12, opt, &cache, &hit);
    CHECK(hit);
    CHECK(to_json(first, opt.fine_step).dump() ==
          to_json(second, opt.fine_step).dump());
    CHECK(first.q == sol.q);
  }
  SECTION("key mismatch misses") {
    shoot_cached(p, 0.2, 1e-12, opt, &cache);
    bool hit = true;
    shoot_cached(p, 0.2, 1e-10, opt, &cache, &hit);
    CHECK(!hit);
  }
  SECTION("stale version entries are ignored") {
    {
      std::ofstream out(tmp.path);
      json rec{{"key",
                {{"eps", 0.2}, {"n", 5}, {"step", opt.sample_step},
                 {"tol", 1e-12}}},
               {"solution", to_json(sol, opt.fine_step)},
               {"version", "qflow-0"}};
      out << rec.dump() << "\n";
    }
    bool hit = true;
    shoot_cached(p, 0.2, 1e-12, opt, &cache, &hit);
    CHECK(!hit);
  }
  SECTION("corrupt lines are skipped") {
    {
      std::ofstream out(tmp.path);
      out << "not json at all\n";
    }
    CHECK(!cache.lookup({5, 0.2, opt.sample_step, 1e-12}).has_value());
  }
}

TEST_CASE("csv emission") {
  const auto& sol = sol52();
  SECTION("trajectory columns") {
    std::ostringstream os;
    std::vector<OdeState> states(sol.samples.begin(), sol.samples.begin() + 3);
    trajectory_csv(os, sol.params, states);
    const std::string text = os.str();
    CHECK(text.rfind("t,v,v1,v2,v3,H\r\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  }
  SECTION("radial profile columns") {
    const auto grid = log_radial_grid(0.5, 1.0, 32);
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) u[i] = grid[i] * grid[i];
    const auto ops = radial_bilaplacian(grid, u, 5);
    std::ostringstream os;
    radial_profile_csv(os, ops);
    const std::string text = os.str();
    CHECK(text.rfind("r,u,lap_u,dr_u,dr_lap_u\r\n", 0) == 0);
  }
}

TEST_CASE("remainder reports and profile dumps") {
  const auto& sol = sol52();
  SECTION("remainder report JSON") {
    const auto rep = expansion_check_u(sol, 1.0, {0.5, 1.0});
    const auto j = to_json(rep);
    CHECK(j["sup"] == rep.sup);
    CHECK(j["rho"].size() == 2);
  }
  SECTION("mode profile CSV") {
    BoundaryData d;
    d.r = 1.0;
    d.coeffs[{2, 0}] = {1.0, 0.5};
    const auto prof = interior_poisson(d, 5).at({2, 0});
    std::ostringstream os;
    mode_profile_csv(os, prof, {0.5, 1.0});
    const std::string text = os.str();
    CHECK(text.rfind("r,w,lap_w,dr_w,dr_lap_w\r\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  }
}

TEST_CASE("mode table and manifests") {
  SECTION("mode table content") {
    const auto t = mode_table(5, 4);
    CHECK(t["modes"].size() == 5);
    CHECK(t["modes"][0]["mu_plus"] == 2.5);
    CHECK(t["modes"][2]["n2n"]["det"] == 49.0);  // (2l+n-2)^2 at l = 2
    CHECK(!t["modes"][1].contains("n2n"));
  }
  SECTION("glue manifest fields") {
    const auto res = glue_run(sol52());
    const auto m = glue_manifest(res);
    CHECK(m.contains("mismatch"));
    CHECK(m.contains("pde_residual_diag"));
    CHECK(m["n"] == 5);
    CHECK(m["schema"] == kSchemaVersion);
    // Stable field order: serializing twice gives identical bytes.
    CHECK(m.dump() == glue_manifest(res).dump());
  }
}
