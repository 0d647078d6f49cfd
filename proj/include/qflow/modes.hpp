#ifndef QFLOW_MODES_HPP
#define QFLOW_MODES_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "qflow/core.hpp"

// Spherical-harmonic mode algebra for the bi-Laplacian: interior/exterior
// Poisson operators with Navier data, the annulus solver, indicial roots,
// and the Navier-to-Neumann mode matrix. Everything is per harmonic degree;
// intra-degree positions only label coefficients.

namespace qflow {

/// lambda_l = l (l + n - 2), the Laplace-Beltrami eigenvalue of degree l.
inline double eigenvalue(int l, int n) {
  if (l < 0) throw DomainError("eigenvalue: l must be >= 0");
  return double(l) * (l + n - 2);
}

/// Dimension of the space of degree-l spherical harmonics on S^{n-1}.
inline std::int64_t sph_multiplicity(int l, int n) {
  if (l < 0) throw DomainError("sph_multiplicity: l must be >= 0");
  if (l == 0) return 1;
  auto choose = [](std::int64_t a, std::int64_t b) {
    if (b < 0 || b > a) return std::int64_t{0};
    std::int64_t r = 1;
    for (std::int64_t i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  return (2 * l + n - 2) * choose(l + n - 3, l) / (n - 2);
}

struct ModeIndex {
  int l = 0;
  double lambda = 0;
  std::int64_t multiplicity = 1;
};

inline ModeIndex make_mode(int l, int n) {
  return {l, eigenvalue(l, n), sph_multiplicity(l, n)};
}

/// Navier data on a sphere of radius r: per (degree, position) a pair
/// (c0, c2) = (trace coefficient, Laplacian-trace coefficient). The
/// Laplacian trace follows the r^{-2} c2 scaling convention throughout.
struct BoundaryData {
  double r = 1;
  std::map<std::pair<int, int>, std::array<double, 2>> coeffs;
};

/// pi': keep harmonic degrees 0 and 1.
inline BoundaryData project_low(const BoundaryData& d) {
  BoundaryData out;
  out.r = d.r;
  for (const auto& [k, v] : d.coeffs)
    if (k.first <= 1) out.coeffs[k] = v;
  return out;
}

/// pi'' = id - pi': degrees >= 2.
inline BoundaryData project_high(const BoundaryData& d) {
  BoundaryData out;
  out.r = d.r;
  for (const auto& [k, v] : d.coeffs)
    if (k.first >= 2) out.coeffs[k] = v;
  return out;
}

/// Delta(r^m Y_l) = [m(m+n-2) - l(l+n-2)] r^{m-2} Y_l. Zero exactly when
/// m is one of the harmonic exponents l or 2-n-l.
inline double laplacian_factor(double m, int l, int n) {
  return m * (m + n - 2) - eigenvalue(l, n);
}

/// Coefficient of the exterior Laplacian-datum branch:
/// D_l = laplacian_factor(4-n-l, l, n) = 8 - 2n - 4l.
inline double exterior_datum_factor(int l, int n) {
  return laplacian_factor(4.0 - n - l, l, n);
}

/// One radial mode solution: a sum of power terms c rho^e at degree l.
/// Boundary traces are exact closed-form algebra on the terms.
struct RadialProfile {
  int l = 0;
  int n = 0;
  std::vector<std::pair<double, double>> terms;  // (exponent, coefficient)

  double value(double rho) const {
    double s = 0;
    for (auto [e, c] : terms) s += c * std::pow(rho, e);
    return s;
  }
  double dr(double rho) const {
    double s = 0;
    for (auto [e, c] : terms) s += c * e * std::pow(rho, e - 1);
    return s;
  }
  double lap(double rho) const {
    double s = 0;
    for (auto [e, c] : terms)
      s += c * laplacian_factor(e, l, n) * std::pow(rho, e - 2);
    return s;
  }
  double drlap(double rho) const {
    double s = 0;
    for (auto [e, c] : terms)
      s += c * laplacian_factor(e, l, n) * (e - 2) * std::pow(rho, e - 3);
    return s;
  }
};

using ProfileSet = std::map<std::pair<int, int>, RadialProfile>;

/// Interior Poisson operator: per degree l >= 2 the biharmonic extension
/// w = a rho^l + b rho^{l+2} matching trace c0 and Laplacian trace r^{-2} c2;
/// degrees 0 and 1 admit only the Laplacian-trace slot and use the pure
/// rho^{l+2} profile with coefficient 1/laplacian_factor(l+2, l, n).
inline ProfileSet interior_poisson(const BoundaryData& data, int n) {
  ProfileSet out;
  const double r = data.r;
  if (!(r > 0)) throw DomainError("interior_poisson: radius must be positive");
  for (const auto& [key, cs] : data.coeffs) {
    const int l = key.first;
    const double c0 = cs[0], c2 = cs[1];
    RadialProfile p;
    p.l = l;
    p.n = n;
    const double Lf = laplacian_factor(l + 2.0, l, n);  // 4l + 2n
    if (l <= 1) {
      if (c0 != 0)
        throw DomainError(
            "interior_poisson: low modes admit only the Laplacian-trace slot");
      p.terms.push_back({l + 2.0, c2 / Lf * std::pow(r, -(l + 2.0))});
    } else {
      const double b = c2 / Lf * std::pow(r, -(l + 2.0));
      const double a = (c0 - c2 / Lf) * std::pow(r, -double(l));
      p.terms.push_back({double(l), a});
      p.terms.push_back({l + 2.0, b});
    }
    out[key] = p;
  }
  return out;
}

/// Exterior Poisson operator: per degree the decaying extension on the two
/// exponents 2-n-l (harmonic, trace slot) and 4-n-l (Laplacian slot with
/// coefficient 1/D_l), matching trace c0 and Laplacian trace r^{-2} c2.
inline ProfileSet exterior_poisson(const BoundaryData& data, int n) {
  ProfileSet out;
  const double r = data.r;
  if (!(r > 0)) throw DomainError("exterior_poisson: radius must be positive");
  for (const auto& [key, cs] : data.coeffs) {
    const int l = key.first;
    const double c0 = cs[0], c2 = cs[1];
    const double D = exterior_datum_factor(l, n);
    if (D == 0) throw ResonanceError("exterior_poisson: resonant mode");
    RadialProfile p;
    p.l = l;
    p.n = n;
    p.terms.push_back(
        {2.0 - n - l, (c0 - c2 / D) * std::pow(r, n + l - 2.0)});
    p.terms.push_back({4.0 - n - l, c2 / D * std::pow(r, n + l - 4.0)});
    out[key] = p;
  }
  return out;
}

enum class AnnulusVariant {
  outer_only,  // Navier data at rho = s only; interior-regular selection
  both_ends    // Navier data at rho = r and rho = s
};

/// Solves Delta^2 w = c rho^m Y_l on the annulus r < rho < s with zero
/// Navier data. The particular solution is
/// c rho^{m+4} / (L(m+4) L(m+2)); the homogeneous correction is a 2x2
/// (outer_only, exponents {l, l+2}) or 4x4 (both_ends) solve.
inline RadialProfile annulus_navier_solve(int l, double r, double s, double m,
                                          double c, int n,
                                          AnnulusVariant variant =
                                              AnnulusVariant::outer_only) {
  if (!(0 < 2 * r && 2 * r < s))
    throw DomainError("annulus_navier_solve: need 0 < 2r < s");
  const double L4 = laplacian_factor(m + 4, l, n);
  const double L2 = laplacian_factor(m + 2, l, n);
  if (L4 == 0 || L2 == 0)
    throw ResonanceError("annulus_navier_solve: resonant exponent");
  RadialProfile p;
  p.l = l;
  p.n = n;
  if (c == 0) return p;
  const double cp = c / (L4 * L2);
  p.terms.push_back({m + 4, cp});
  const std::array<double, 4> exps = {double(l), l + 2.0, 2.0 - n - l,
                                      4.0 - n - l};
  auto val = [&](double e, double rho) { return std::pow(rho, e); };
  auto lapv = [&](double e, double rho) {
    return laplacian_factor(e, l, n) * std::pow(rho, e - 2);
  };
  if (variant == AnnulusVariant::outer_only) {
    Eigen::Matrix2d M;
    M << val(exps[0], s), val(exps[1], s), lapv(exps[0], s), lapv(exps[1], s);
    Eigen::Vector2d rhs;
    rhs << -cp * val(m + 4, s), -cp * lapv(m + 4, s);
    Eigen::Vector2d sol = M.fullPivLu().solve(rhs);
    if (!(M * sol - rhs).isZero(1e-10 * std::max(1.0, rhs.norm())))
      throw SolveError("annulus_navier_solve: singular boundary system");
    p.terms.push_back({exps[0], sol[0]});
    p.terms.push_back({exps[1], sol[1]});
  } else {
    Eigen::Matrix4d M;
    Eigen::Vector4d rhs;
    const std::array<double, 2> radii = {r, s};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 4; ++j) {
        M(2 * i, j) = val(exps[static_cast<size_t>(j)], radii[static_cast<size_t>(i)]);
        M(2 * i + 1, j) = lapv(exps[static_cast<size_t>(j)], radii[static_cast<size_t>(i)]);
      }
      rhs[2 * i] = -cp * val(m + 4, radii[static_cast<size_t>(i)]);
      rhs[2 * i + 1] = -cp * lapv(m + 4, radii[static_cast<size_t>(i)]);
    }
    Eigen::FullPivLU<Eigen::Matrix4d> lu(M);
    if (!lu.isInvertible())
      throw SolveError("annulus_navier_solve: singular boundary system");
    Eigen::Vector4d sol = lu.solve(rhs);
    for (int j = 0; j < 4; ++j)
      p.terms.push_back({exps[static_cast<size_t>(j)], sol[j]});
  }
  return p;
}

/// Indicial roots of the mode-l cylinder operator at the zero solution:
/// mu^{+/-} = sqrt(n(n-4) + 8 + 4 lambda_l +/- 4 sqrt((n-2)^2 + 4 lambda_l))/2.
inline std::pair<double, double> indicial_roots(int l, int n) {
  const double lam = eigenvalue(l, n);
  const double nd = n;
  const double inner = std::sqrt((nd - 2) * (nd - 2) + 4 * lam);
  const double base = nd * (nd - 4) + 8 + 4 * lam;
  return {std::sqrt(base + 4 * inner) / 2, std::sqrt(base - 4 * inner) / 2};
}

/// Navier-to-Neumann mode matrix for degree l >= 2, acting on (c0, c2):
/// the weighted Neumann differences (r d_r, r^3 d_r Delta) of the interior
/// minus exterior extensions at rho = r. Scale invariance makes the entries
/// independent of r, so they are assembled in closed form:
///   [ 2l+n-2   2/(4l+2n) - 2/D_l ]
///   [ 0        2l+n-2            ].
inline Eigen::Matrix2d n2n_matrix(int l, int n) {
  if (l < 2) throw DomainError("n2n_matrix: high modes only (l >= 2)");
  Eigen::Matrix2d M;
  const double diag = 2.0 * l + n - 2;
  M(0, 0) = diag;
  M(0, 1) = 2.0 / laplacian_factor(l + 2.0, l, n) -
            2.0 / exterior_datum_factor(l, n);
  M(1, 0) = 0;
  M(1, 1) = diag;
  return M;
}

/// Modewise application of n2n_matrix to high-mode data.
inline BoundaryData n2n_apply(const BoundaryData& data, int n) {
  BoundaryData out;
  out.r = data.r;
  for (const auto& [key, cs] : data.coeffs) {
    if (key.first < 2)
      throw DomainError("n2n_apply: data must be supported on degrees >= 2");
    const Eigen::Matrix2d M = n2n_matrix(key.first, n);
    out.coeffs[key] = {M(0, 0) * cs[0] + M(0, 1) * cs[1],
                       M(1, 0) * cs[0] + M(1, 1) * cs[1]};
  }
  return out;
}

/// Inverse of n2n_apply by per-mode 2x2 solves.
inline BoundaryData n2n_invert(const BoundaryData& data, int n) {
  BoundaryData out;
  out.r = data.r;
  for (const auto& [key, cs] : data.coeffs) {
    if (key.first < 2)
      throw DomainError("n2n_invert: data must be supported on degrees >= 2");
    const Eigen::Matrix2d M = n2n_matrix(key.first, n);
    Eigen::Vector2d rhs(cs[0], cs[1]);
    Eigen::Vector2d sol = M.fullPivLu().solve(rhs);
    out.coeffs[key] = {sol[0], sol[1]};
  }
  return out;
}

}  // namespace qflow

#endif  // QFLOW_MODES_HPP
