#ifndef QFLOW_CORE_HPP
#define QFLOW_CORE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Dimension-dependent constants of the fourth-order conformal ODE/PDE,
// the nonlinearity and Hamiltonian first integral, and discrete weighted
// sup norms on dyadic annuli.

namespace qflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument / out-of-domain input. CLI maps this to exit code 2.
struct DomainError : Error {
  using Error::Error;
};

// Numerical failure (solver did not converge, singular system, ...).
// CLI maps this to exit code 3.
struct NumericalError : Error {
  using Error::Error;
};

struct ShootingBracketError : NumericalError {
  using NumericalError::NumericalError;
};
struct ConvergenceError : NumericalError {
  using NumericalError::NumericalError;
};
struct PeriodNotFound : NumericalError {
  using NumericalError::NumericalError;
};
struct ResonanceError : NumericalError {
  using NumericalError::NumericalError;
};
struct SolveError : NumericalError {
  using NumericalError::NumericalError;
};
struct IllConditioned : NumericalError {
  using NumericalError::NumericalError;
};

struct IoError : Error {
  using Error::Error;
};

/// Constants of the cylinder ODE
///   v'''' - A v'' = f(v),  f(v) = C v^{(n+4)/(n-4)} - B v,
/// all derived from the dimension n at construction. A, B, C are dyadic
/// rationals, so they are exact in binary floating point.
struct DimensionParams {
  int n = 0;
  double A = 0, B = 0, C = 0;
  double v_cyl = 0;   // cylindrical equilibrium, in (0,1)
  double H_cyl = 0;   // its Hamiltonian energy, < 0
  double p_crit = 0;  // critical exponent (n+4)/(n-4)
  double kelvin_exp = 0;  // 4 - n
};

inline DimensionParams make_params(int n) {
  if (n < 5) throw DomainError("make_params: n must be >= 5");
  DimensionParams p;
  p.n = n;
  const double nd = n;
  p.A = (nd * (nd - 4) + 8) / 2;
  p.B = nd * nd * (nd - 4) * (nd - 4) / 16;
  p.C = nd * (nd - 4) * (nd * nd - 4) / 16;
  p.p_crit = (nd + 4) / (nd - 4);
  p.kelvin_exp = 4 - nd;
  p.v_cyl = std::pow(nd * (nd - 4) / (nd * nd - 4), (nd - 4) / 8);
  p.H_cyl = -(nd - 4) * (nd * nd - 4) / 8 *
            std::pow(nd * (nd - 4) / (nd * nd - 4), nd / 4);
  return p;
}

/// State of the cylinder ODE: value and first three t-derivatives.
struct OdeState {
  double t = 0;
  double v = 0, v1 = 0, v2 = 0, v3 = 0;
};

/// f(v) = C v^{(n+4)/(n-4)} - B v. Negative v is rejected: fractional
/// powers of a negative base are outside the modeled solution class.
inline double nonlinearity_f(const DimensionParams& p, double v) {
  if (v < 0) throw DomainError("nonlinearity_f: negative v");
  return p.C * std::pow(v, p.p_crit) - p.B * v;
}

/// First integral H(v3, v2, v1, v) of the ODE; constant along exact flows.
inline double hamiltonian(const DimensionParams& p, const OdeState& s) {
  const double nd = p.n;
  const double w = s.v < 0 ? 0.0 : std::pow(s.v, 2 * nd / (nd - 4));
  return -s.v3 * s.v1 + 0.5 * s.v2 * s.v2 +
         (nd * nd - 4 * nd + 8) / 4 * s.v1 * s.v1 -
         nd * nd * (nd - 4) * (nd - 4) / 32 * s.v * s.v +
         (nd - 4) * (nd - 4) * (nd * nd - 4) / 32 * w;
}

/// Fourth t-derivative along the flow: v'''' = A v'' + f(v).
inline double ode_rhs(const DimensionParams& p, const OdeState& s) {
  return p.A * s.v2 + nonlinearity_f(p, s.v);
}

// ---------------------------------------------------------------------------
// Discrete weighted sup norms on dyadic annuli (Holder seminorm omitted).

/// Weighted norm parameters: derivative order k <= 4, weight exponent mu,
/// outer radius r. The annulus grid travels with the samples.
struct WeightedNormSpec {
  int k = 0;
  double mu = 0;
  double r = 1;
};

/// One annulus [sigma, 2 sigma] with caller-supplied |grad^j u| samples per
/// derivative order. Orders left empty contribute zero.
struct AnnulusSamples {
  double sigma = 0;
  std::array<std::vector<double>, 5> deriv_abs;
};

/// sigma_i = r / 2^{i+1}, i = 0..count-1; annuli [sigma, 2 sigma] tile (0, r].
inline std::vector<double> dyadic_sigmas(double r, int count) {
  if (r <= 0 || count <= 0) throw DomainError("dyadic_sigmas: bad grid");
  std::vector<double> s(count);
  double v = r / 2;
  for (int i = 0; i < count; ++i, v /= 2) s[i] = v;
  return s;
}

/// sup over annuli of sigma^{-mu} sum_{j<=k} sigma^j max|grad^j u|.
inline double weighted_sup_norm(const std::vector<AnnulusSamples>& annuli,
                                const WeightedNormSpec& spec) {
  if (spec.r <= 0) throw DomainError("weighted_sup_norm: r must be positive");
  if (spec.k < 0 || spec.k > 4)
    throw DomainError("weighted_sup_norm: order k out of range");
  if (annuli.empty()) throw DomainError("weighted_sup_norm: empty grid");
  double norm = 0;
  for (const auto& a : annuli) {
    if (a.sigma <= 0) throw DomainError("weighted_sup_norm: bad sigma");
    bool any = false;
    double acc = 0;
    double sj = 1;  // sigma^j
    for (int j = 0; j <= spec.k; ++j, sj *= a.sigma) {
      const auto& vals = a.deriv_abs[static_cast<size_t>(j)];
      if (vals.empty()) continue;
      any = true;
      double m = 0;
      for (double x : vals) m = std::max(m, std::abs(x));
      acc += sj * m;
    }
    if (!any) throw DomainError("weighted_sup_norm: annulus without samples");
    norm = std::max(norm, std::pow(a.sigma, -spec.mu) * acc);
  }
  return norm;
}

/// Samples a radial function at the representative radius sigma of each
/// dyadic annulus (one point per annulus, plus optional extra points).
template <class F>
std::vector<AnnulusSamples> sample_radial_annuli(F&& value_at, double r,
                                                 int count,
                                                 int per_annulus = 1) {
  std::vector<AnnulusSamples> out;
  for (double sigma : dyadic_sigmas(r, count)) {
    AnnulusSamples a;
    a.sigma = sigma;
    for (int i = 0; i < per_annulus; ++i) {
      const double rho = sigma * (1.0 + i / double(per_annulus));
      a.deriv_abs[0].push_back(std::abs(value_at(rho)));
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace qflow

#endif  // QFLOW_CORE_HPP
