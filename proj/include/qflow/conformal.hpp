#ifndef QFLOW_CONFORMAL_HPP
#define QFLOW_CONFORMAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "qflow/delaunay.hpp"

// Euclidean conformal factors built from Delaunay orbits: the cylinder-ball
// transport, the Kelvin transform and the translated family, radial
// finite-difference operators on log grids, and the expansion checks.

namespace qflow {

using VecN = std::vector<double>;

inline double norm2(const VecN& x) {
  double s = 0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

/// The Euclidean-side solution family: u_{eps,R,a}. Evaluation excludes the
/// two singular points x = 0 and x = a/|a|^2.
struct ConformalFactor {
  DelaunaySolution solution;
  double R = 1;
  VecN a;  // translation-at-infinity; empty or zero means none
};

/// u(x) = |x|^{(4-n)/2} v(-log|x| + log R).
inline double u_from_v(const DelaunaySolution& sol, double R, const VecN& x) {
  const double r = norm2(x);
  if (r == 0) throw DomainError("u_from_v: x = 0 is singular");
  const double t = -std::log(r) + std::log(R);
  return std::pow(r, (4.0 - sol.params.n) / 2) * evaluate(sol, t).v;
}

/// Radial version of u_from_v.
inline double u_radial(const DelaunaySolution& sol, double R, double rho) {
  if (!(rho > 0)) throw DomainError("u_radial: rho must be positive");
  const double t = -std::log(rho) + std::log(R);
  return std::pow(rho, (4.0 - sol.params.n) / 2) * evaluate(sol, t).v;
}

/// Radial derivatives d^k u / d rho^k, k = 0..4, of u(rho) =
/// rho^kappa v(log R - log rho) with kappa = (4-n)/2, by the chain-rule
/// recursion c_{k+1,j} = (kappa - k) c_{k,j} - c_{k,j-1}.
inline std::array<double, 5> u_radial_derivs(const DelaunaySolution& sol,
                                             double R, double rho) {
  if (!(rho > 0)) throw DomainError("u_radial_derivs: rho must be positive");
  const double kappa = (4.0 - sol.params.n) / 2;
  const double t = std::log(R) - std::log(rho);
  const OdeState s = evaluate(sol, t);
  const std::array<double, 5> v = {s.v, s.v1, s.v2, s.v3,
                                   ode_rhs(sol.params, s)};
  std::array<double, 5> out{};
  double c[5][5] = {};
  c[0][0] = 1;
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j <= k + 1; ++j)
      c[k + 1][j] = (kappa - k) * (j <= k ? c[k][j] : 0.0) -
                    (j >= 1 ? c[k][j - 1] : 0.0);
  for (int k = 0; k <= 4; ++k) {
    double acc = 0;
    for (int j = 0; j <= k; ++j) acc += c[k][j] * v[static_cast<size_t>(j)];
    out[static_cast<size_t>(k)] = std::pow(rho, kappa - k) * acc;
  }
  return out;
}

/// u_{eps,R,a}(x) = |x - a|x|^2|^{(4-n)/2}
///                  v(-log|x| + log|x/|x| - a|x|| + log R).
inline double u_family(const ConformalFactor& f, const VecN& x) {
  const double r = norm2(x);
  if (r == 0) throw DomainError("u_family: x = 0 is singular");
  const bool has_a =
      !f.a.empty() && std::any_of(f.a.begin(), f.a.end(),
                                  [](double c) { return c != 0; });
  if (!has_a) return u_from_v(f.solution, f.R, x);
  if (f.a.size() != x.size())
    throw DomainError("u_family: dimension mismatch between a and x");
  VecN y(x.size());  // x - a |x|^2
  VecN w(x.size());  // x/|x| - a |x|
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] - f.a[i] * r * r;
    w[i] = x[i] / r - f.a[i] * r;
  }
  const double ry = norm2(y), rw = norm2(w);
  if (ry == 0 || rw == 0)
    throw DomainError("u_family: x coincides with a singular point");
  const double n = f.solution.params.n;
  const double t = -std::log(r) + std::log(rw) + std::log(f.R);
  return std::pow(ry, (4 - n) / 2) * evaluate(f.solution, t).v;
}

/// Kelvin transform K(u)(x) = |x|^{4-n} u(x/|x|^2).
template <class Field>
double kelvin(Field&& u, int n, const VecN& x) {
  const double r = norm2(x);
  if (r == 0) throw DomainError("kelvin: x = 0 is singular");
  VecN y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / (r * r);
  return std::pow(r, 4.0 - n) * u(y);
}

// ---------------------------------------------------------------------------
// Radial finite differences on uniform log-radius grids.

/// Uniform log grid over [r_lo, r_hi].
inline std::vector<double> log_radial_grid(double r_lo, double r_hi,
                                           std::size_t n_pts) {
  if (!(0 < r_lo && r_lo < r_hi) || n_pts < 2)
    throw DomainError("log_radial_grid: bad range");
  std::vector<double> g(n_pts);
  const double a = std::log(r_lo), b = std::log(r_hi);
  for (std::size_t i = 0; i < n_pts; ++i)
    g[i] = std::exp(a + (b - a) * double(i) / double(n_pts - 1));
  return g;
}

/// Radial profile data on the interior of a log grid: u, its Laplacian,
/// bi-Laplacian and their radial derivatives (fourth-order stencils).
struct RadialOps {
  std::vector<double> rho;  // inner subgrid (4 points trimmed per side)
  std::vector<double> u, du, lap, dlap, bilap;
};

namespace detail {

// Fourth-order centered first/second derivative in the log coordinate.
inline void log_derivs(const std::vector<double>& f, double h,
                       std::vector<double>& d1, std::vector<double>& d2) {
  const std::size_t n = f.size();
  d1.assign(n, 0);
  d2.assign(n, 0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    d1[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
    d2[i] = (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] -
             f[i + 2]) /
            (12 * h * h);
  }
}

}  // namespace detail

/// Radial Laplacian applied twice via centered differences in log rho:
/// Delta = e^{-2x}(d_xx + (n-2) d_x) for x = log rho. Requires a uniform
/// log grid with enough points for the doubled stencil.
inline RadialOps radial_bilaplacian(const std::vector<double>& rho,
                                    const std::vector<double>& u, int n) {
  const std::size_t m = rho.size();
  if (m < 5 || u.size() != m)
    throw DomainError("radial_bilaplacian: grid too small");
  if (m < 9) throw DomainError("radial_bilaplacian: grid too small");
  const double h = std::log(rho[1]) - std::log(rho[0]);
  for (std::size_t i = 1; i < m; ++i) {
    const double hi = std::log(rho[i]) - std::log(rho[i - 1]);
    if (std::abs(hi - h) > 1e-9 * h)
      throw DomainError("radial_bilaplacian: grid not uniform in log rho");
  }
  std::vector<double> d1, d2;
  detail::log_derivs(u, h, d1, d2);
  std::vector<double> lap(m, 0), du(m, 0);
  for (std::size_t i = 2; i + 2 < m; ++i) {
    const double r2 = rho[i] * rho[i];
    lap[i] = (d2[i] + (n - 2) * d1[i]) / r2;
    du[i] = d1[i] / rho[i];
  }
  std::vector<double> l1, l2;
  detail::log_derivs(lap, h, l1, l2);
  RadialOps out;
  for (std::size_t i = 4; i + 4 < m; ++i) {
    const double r2 = rho[i] * rho[i];
    out.rho.push_back(rho[i]);
    out.u.push_back(u[i]);
    out.du.push_back(du[i]);
    out.lap.push_back(lap[i]);
    out.dlap.push_back(l1[i] / rho[i]);
    out.bilap.push_back((l2[i] + (n - 2) * l1[i]) / r2);
  }
  return out;
}

/// Residual of the flat equation: Delta^2 u - (n(n^2-4)(n-4)/16) u^p on the
/// inner subgrid.
struct FlatResidual {
  std::vector<double> rho;
  std::vector<double> residual;
};

inline FlatResidual flat_residual(const std::vector<double>& rho,
                                  const std::vector<double>& u,
                                  const DimensionParams& p) {
  for (double v : u)
    if (!(v > 0)) throw DomainError("flat_residual: u must be positive");
  RadialOps ops = radial_bilaplacian(rho, u, p.n);
  FlatResidual out;
  out.rho = ops.rho;
  out.residual.resize(ops.rho.size());
  for (std::size_t i = 0; i < ops.rho.size(); ++i)
    out.residual[i] = ops.bilap[i] - p.C * std::pow(ops.u[i], p.p_crit);
  return out;
}

// ---------------------------------------------------------------------------
// Expansion checks.

struct RemainderReport {
  double sup = 0;
  std::vector<double> rho;
  std::vector<double> normalized;
};

/// Remainder of the four-term expansion of u_{eps,R} on a radial grid in
/// (0, R], normalized by R^{(n+4)/2} eps^{(n+4)/(n-4)} |x|^{-n}.
inline RemainderReport expansion_check_u(const DelaunaySolution& sol, double R,
                                         const std::vector<double>& rho) {
  const double n = sol.params.n;
  const double a = sol.alpha, b = sol.beta;
  RemainderReport rep;
  for (double r : rho) {
    if (!(r > 0 && r <= R * (1 + 1e-12)))
      throw DomainError("expansion_check_u: grid must lie in (0, R]");
    const double model =
        a / 2 * (std::pow(R, (4 - n) / 2) +
                 std::pow(R, (n - 4) / 2) * std::pow(r, 4 - n)) +
        b / 2 * (std::pow(R, -n / 2) * r * r +
                 std::pow(R, n / 2) * std::pow(r, 2 - n));
    const double denom = std::pow(R, (n + 4) / 2) *
                         std::pow(sol.eps, sol.params.p_crit) *
                         std::pow(r, -n);
    const double val =
        std::abs(u_radial(sol, R, r) - model) / denom;
    rep.rho.push_back(r);
    rep.normalized.push_back(val);
    rep.sup = std::max(rep.sup, val);
  }
  return rep;
}

/// Remainder of the first-order translation expansion
///   u_{eps,R,a}(x) = u_{eps,R}(x) + ((n-4) u + |x| d_r u)(x) <a,x> + rem,
/// normalized by |a|^2 |x|^{(8-n)/2} and, when R <= |x|, also by
/// |a|^2 eps R^{(4-n)/2} |x|^2.
struct TranslationReport {
  double sup_interior = 0;   // |a|^2 |x|^{(8-n)/2} normalization
  double sup_exterior = 0;   // |a|^2 eps R^{(4-n)/2}|x|^2, only where R <= |x|
  bool exterior_seen = false;
};

inline TranslationReport translation_expansion_check(
    const DelaunaySolution& sol, double R, const VecN& a,
    const std::vector<VecN>& xs, double r0 = 0.1) {
  const double n = sol.params.n;
  const double amag = norm2(a);
  ConformalFactor fac{sol, R, a};
  TranslationReport rep;
  for (const auto& x : xs) {
    const double r = norm2(x);
    if (!(amag * r < r0))
      throw DomainError("translation_expansion_check: |a||x| >= r0");
    const double dot =
        std::inner_product(a.begin(), a.end(), x.begin(), 0.0);
    const auto du = u_radial_derivs(sol, R, r);
    const double linear = ((n - 4) * du[0] + r * du[1]) * dot;
    const double rem = u_family(fac, x) - (du[0] + linear);
    const double norm_int =
        amag * amag * std::pow(r, (8 - n) / 2);
    rep.sup_interior = std::max(rep.sup_interior, std::abs(rem) / norm_int);
    if (R <= r) {
      const double norm_ext =
          amag * amag * sol.eps * std::pow(R, (4 - n) / 2) * r * r;
      rep.sup_exterior = std::max(rep.sup_exterior, std::abs(rem) / norm_ext);
      rep.exterior_seen = true;
    }
  }
  return rep;
}

/// The biharmonic auxiliary function: Upsilon(x) = -(beta/2) R^{-n/2} |x|^2.
inline double upsilon(const DelaunaySolution& sol, double R, double rho) {
  return -sol.beta / 2 * std::pow(R, -sol.params.n / 2.0) * rho * rho;
}

}  // namespace qflow

#endif  // QFLOW_CONFORMAL_HPP
