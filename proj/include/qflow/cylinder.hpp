#ifndef QFLOW_CYLINDER_HPP
#define QFLOW_CYLINDER_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <functional>
#include <vector>

#include "qflow/delaunay.hpp"
#include "qflow/modes.hpp"

// Mode-projected linearized cylinder operators
//   L^l w = w'''' - (2 lambda_l + A) w''
//           + (lambda_l^2 + (n(n-4)/2) lambda_l + B - (n(n+4)(n^2-4)/16) V) w
// with V(t) = v_eps^{8/(n-4)}(t), discretized by high-order finite
// differences, plus the a priori estimate ratio measurements.

namespace qflow {

/// lambda^2 + (n(n-4)/2) lambda + n^2(n-4)^2/16 - n(n+4)(n^2-4)/16; positive
/// for all lambda >= 2n, which is what makes the high-mode energy coercive.
inline double coercivity_margin(int n, double lambda) {
  const double nd = n;
  return lambda * lambda + nd * (nd - 4) / 2 * lambda +
         nd * nd * (nd - 4) * (nd - 4) / 16 -
         nd * (nd + 4) * (nd * nd - 4) / 16;
}

enum class BoundaryKind {
  navier_both_ends,  // w = w'' = 0 at t0 and at T
  terminal_clamped   // w = w' = w'' = w''' = 0 at T only
};

/// One mode problem on [t0, T]. The potential samples are V(t_i) =
/// v_eps^{8/(n-4)}(t_i) on the uniform grid (or any nonnegative samples for
/// model problems).
struct ModeOperator {
  DimensionParams params;
  int l = 0;
  double t0 = 0, T = 1;
  double h = 1e-2;
  BoundaryKind bc = BoundaryKind::navier_both_ends;
  std::vector<double> potential;  // size = n_nodes

  std::size_t n_nodes() const {
    return static_cast<std::size_t>(std::llround((T - t0) / h)) + 1;
  }
  double node(std::size_t i) const { return t0 + double(i) * h; }
};

/// Builds a mode operator whose potential comes from a Delaunay orbit.
inline ModeOperator make_mode_operator(const DelaunaySolution& sol, int l,
                                       double t0, double T, double h,
                                       BoundaryKind bc) {
  if (!(h > 0 && T > t0)) throw DomainError("make_mode_operator: bad interval");
  if (h > sol.period / 200)
    throw DomainError("make_mode_operator: grid must resolve the period");
  ModeOperator op;
  op.params = sol.params;
  op.l = l;
  op.t0 = t0;
  op.T = T;
  op.h = h;
  op.bc = bc;
  const double ex = 8.0 / (sol.params.n - 4);
  for (std::size_t i = 0; i < op.n_nodes(); ++i)
    op.potential.push_back(std::pow(evaluate(sol, op.node(i)).v, ex));
  return op;
}

namespace detail {

// Fornberg finite-difference weights: derivatives 0..m at point z from
// function values at the given nodes.
inline std::vector<std::vector<double>> fd_weights(
    double z, const std::vector<double>& x, int m) {
  const std::size_t nn = x.size();
  std::vector<std::vector<double>> c(
      nn, std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0));
  double c1 = 1, c4 = x[0] - z;
  c[0][0] = 1;
  for (std::size_t i = 1; i < nn; ++i) {
    const int mn = static_cast<int>(std::min<std::size_t>(i, static_cast<std::size_t>(m)));
    double c2 = 1;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][static_cast<size_t>(k)] =
              c1 * (k * c[i - 1][static_cast<size_t>(k - 1)] -
                    c5 * c[i - 1][static_cast<size_t>(k)]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][static_cast<size_t>(k)] =
            (c4 * c[j][static_cast<size_t>(k)] -
             k * c[j][static_cast<size_t>(k - 1)]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  return c;
}

}  // namespace detail

struct AssembledSystem {
  Eigen::SparseMatrix<double> A;
  std::vector<std::size_t> ode_rows;  // node indices of the ODE rows
  std::size_t first_ode_row = 0;      // matrix row of ode_rows[0]
  std::size_t n = 0;
};

/// Finite-difference assembly. Each ODE row uses the nine nearest nodes
/// (Fornberg weights, order >= 5 for the fourth derivative); boundary rows
/// impose the selected condition with one-sided stencils of the same width.
inline AssembledSystem assemble(const ModeOperator& op) {
  const std::size_t N = op.n_nodes();
  if (N < 12) throw DomainError("assemble: under-resolved grid");
  if (op.potential.size() != N)
    throw DomainError("assemble: potential sample count mismatch");
  for (double v : op.potential)
    if (!(v >= 0) || !std::isfinite(v))
      throw DomainError("assemble: potential must be finite and nonnegative");
  const double nd = op.params.n;
  const double lam = eigenvalue(op.l, op.params.n);
  const double c2 = -(2 * lam + (nd * (nd - 4) + 8) / 2);
  const double c0_base = lam * lam + nd * (nd - 4) / 2 * lam +
                         nd * nd * (nd - 4) * (nd - 4) / 16;
  const double cpot = nd * (nd + 4) * (nd * nd - 4) / 16;

  const std::size_t W = 9;  // stencil width
  std::vector<Eigen::Triplet<double>> trip;
  AssembledSystem sys;
  sys.n = N;

  auto support_start = [&](std::size_t i) {
    const std::size_t half = W / 2;
    if (i < half) return std::size_t{0};
    if (i + half >= N) return N - W;
    return i - half;
  };
  auto add_derivative_row = [&](std::size_t row, std::size_t at, int order,
                                double scale) {
    const std::size_t s0 = support_start(at);
    std::vector<double> xs(W);
    for (std::size_t j = 0; j < W; ++j) xs[j] = op.node(s0 + j);
    const auto w = detail::fd_weights(op.node(at), xs, order);
    for (std::size_t j = 0; j < W; ++j)
      trip.emplace_back(static_cast<int>(row), static_cast<int>(s0 + j),
                        scale * w[j][static_cast<size_t>(order)]);
  };
  auto add_ode_row = [&](std::size_t row, std::size_t at) {
    const std::size_t s0 = support_start(at);
    std::vector<double> xs(W);
    for (std::size_t j = 0; j < W; ++j) xs[j] = op.node(s0 + j);
    const auto w = detail::fd_weights(op.node(at), xs, 4);
    const double c0 = c0_base - cpot * op.potential[at];
    for (std::size_t j = 0; j < W; ++j) {
      double coef = w[j][4] + c2 * w[j][2];
      if (s0 + j == at) coef += c0;
      trip.emplace_back(static_cast<int>(row), static_cast<int>(s0 + j), coef);
    }
    sys.ode_rows.push_back(at);
  };

  std::size_t row = 0;
  if (op.bc == BoundaryKind::navier_both_ends) {
    trip.emplace_back(static_cast<int>(row++), 0, 1.0);  // w(t0) = 0
    add_derivative_row(row++, 0, 2, 1.0);                // w''(t0) = 0
    sys.first_ode_row = row;
    for (std::size_t i = 2; i + 2 < N; ++i) add_ode_row(row++, i);
    add_derivative_row(row++, N - 1, 2, 1.0);            // w''(T) = 0
    trip.emplace_back(static_cast<int>(row++), static_cast<int>(N - 1), 1.0);
  } else {
    sys.first_ode_row = 0;
    for (std::size_t i = 0; i + 4 < N; ++i) add_ode_row(row++, i);
    trip.emplace_back(static_cast<int>(row++), static_cast<int>(N - 1), 1.0);
    add_derivative_row(row++, N - 1, 1, 1.0);
    add_derivative_row(row++, N - 1, 2, 1.0);
    add_derivative_row(row++, N - 1, 3, 1.0);
  }
  sys.A.resize(static_cast<int>(N), static_cast<int>(N));
  sys.A.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

struct BvpSolution {
  std::vector<double> w;
  double residual_rel = 0;
};

namespace detail {

// Fourth-order midpoint interpolation of node samples on interval [i, i+1].
inline double midpoint(const std::vector<double>& g, std::size_t i) {
  const std::size_t n = g.size();
  if (i >= 1 && i + 2 < n)
    return (-g[i - 1] + 9 * g[i] + 9 * g[i + 1] - g[i + 2]) / 16;
  if (i + 3 < n)  // left edge
    return 0.3125 * g[i] + 0.9375 * g[i + 1] - 0.3125 * g[i + 2] +
           0.0625 * g[i + 3];
  // right edge
  return 0.3125 * g[i + 1] + 0.9375 * g[i] - 0.3125 * g[i - 1] +
         0.0625 * g[i - 2];
}

// Backward RK4 march for the terminal-value problem: zero 4-jet at T,
// w'''' = c2 w'' - c0(t) w + f(t) integrated down to t0. Stable (the
// growth of the backward modes is the problem's own conditioning) and
// exactly zero downstream of a compactly supported load.
inline std::vector<double> march_terminal(const ModeOperator& op,
                                          const std::vector<double>& f) {
  const double nd = op.params.n;
  const double lam = eigenvalue(op.l, op.params.n);
  const double c2 = 2 * lam + (nd * (nd - 4) + 8) / 2;
  const double c0b = lam * lam + nd * (nd - 4) / 2 * lam +
                     nd * nd * (nd - 4) * (nd - 4) / 16;
  const double cpot = nd * (nd + 4) * (nd * nd - 4) / 16;
  const std::size_t N = op.n_nodes();
  std::array<double, 4> y{0, 0, 0, 0};
  std::vector<double> w(N, 0.0);
  w[N - 1] = 0;
  const double h = op.h;
  for (std::size_t i = N - 1; i > 0; --i) {
    const double c0_r = c0b - cpot * op.potential[i];
    const double c0_m = c0b - cpot * midpoint(op.potential, i - 1);
    const double c0_l = c0b - cpot * op.potential[i - 1];
    const double f_r = f[i];
    const double f_m = midpoint(f, i - 1);
    const double f_l = f[i - 1];
    auto rhs = [&](const std::array<double, 4>& s, double c0, double fv) {
      return std::array<double, 4>{s[1], s[2], s[3],
                                   c2 * s[2] - c0 * s[0] + fv};
    };
    auto advance = [&](const std::array<double, 4>& s,
                       const std::array<double, 4>& k, double step) {
      return std::array<double, 4>{s[0] - step * k[0], s[1] - step * k[1],
                                   s[2] - step * k[2], s[3] - step * k[3]};
    };
    const auto k1 = rhs(y, c0_r, f_r);
    const auto k2 = rhs(advance(y, k1, h / 2), c0_m, f_m);
    const auto k3 = rhs(advance(y, k2, h / 2), c0_m, f_m);
    const auto k4 = rhs(advance(y, k3, h), c0_l, f_l);
    for (int c = 0; c < 4; ++c)
      y[static_cast<size_t>(c)] -=
          h / 6 * (k1[static_cast<size_t>(c)] + 2 * k2[static_cast<size_t>(c)] +
                   2 * k3[static_cast<size_t>(c)] + k4[static_cast<size_t>(c)]);
    w[i - 1] = y[0];
  }
  return w;
}

}  // namespace detail

/// Solves the mode problem. Navier conditions use the banded system above;
/// terminal-clamped problems are pure final-value problems and are marched
/// backward from the zero terminal jet. The reported residual is the
/// normwise backward residual of the banded discretization.
inline BvpSolution solve_mode_bvp(const ModeOperator& op,
                                  const std::vector<double>& f) {
  const std::size_t N = op.n_nodes();
  if (f.size() != N) throw DomainError("solve_mode_bvp: rhs size mismatch");
  BvpSolution out;
  AssembledSystem sys = assemble(op);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<int>(N));
  std::size_t row = sys.first_ode_row;
  for (std::size_t at : sys.ode_rows)
    rhs[static_cast<int>(row++)] = f[at];
  Eigen::VectorXd w(static_cast<int>(N));
  if (op.bc == BoundaryKind::navier_both_ends) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(sys.A);
    if (lu.info() != Eigen::Success)
      throw SolveError("solve_mode_bvp: factorization failed");
    w = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
      throw SolveError("solve_mode_bvp: solve failed");
  } else {
    const auto samples = detail::march_terminal(op, f);
    for (std::size_t i = 0; i < N; ++i)
      w[static_cast<int>(i)] = samples[i];
  }
  double row_norm = 0;
  for (int k = 0; k < sys.A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, k); it; ++it)
      row_norm = std::max(row_norm, std::abs(it.value()));
  }
  const double denom =
      row_norm * w.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff() + 1e-300;
  out.residual_rel = (sys.A * w - rhs).cwiseAbs().maxCoeff() / denom;
  out.w.assign(w.data(), w.data() + w.size());
  return out;
}

/// Admissible weighted-sup ratio sup e^{dt}|w| / sup e^{dt}|f| with
/// delta = (n-4)/2 + mu; mu in (2-n, 2) for high modes, mu > 0 for degree 0,
/// mu > 1 for degree 1. Zero rhs gives ratio 0 by convention.
inline double apriori_ratio(const ModeOperator& op,
                            const std::vector<double>& f, double delta) {
  const double nd = op.params.n;
  const double mu = delta - (nd - 4) / 2;
  if (op.l >= 2) {
    if (!(mu > 2 - nd && mu < 2))
      throw DomainError("apriori_ratio: high modes need mu in (2-n, 2)");
  } else if (op.l == 0) {
    if (!(mu > 0)) throw DomainError("apriori_ratio: degree 0 needs mu > 0");
  } else {
    if (!(mu > 1)) throw DomainError("apriori_ratio: degree 1 needs mu > 1");
  }
  double fnorm = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    fnorm = std::max(fnorm, std::exp(delta * op.node(i)) * std::abs(f[i]));
  if (fnorm == 0) return 0.0;
  const BvpSolution sol = solve_mode_bvp(op, f);
  double wnorm = 0;
  for (std::size_t i = 0; i < sol.w.size(); ++i)
    wnorm = std::max(wnorm, std::exp(delta * op.node(i)) * std::abs(sol.w[i]));
  return wnorm / fnorm;
}

/// Symmetric second-order Navier discretization on interior nodes (classical
/// 5-point / 3-point stencils with odd ghosts); used to examine positivity
/// of the discrete energy form.
inline Eigen::MatrixXd navier_energy_matrix(const ModeOperator& op) {
  if (op.bc != BoundaryKind::navier_both_ends)
    throw DomainError("navier_energy_matrix: Navier conditions only");
  const std::size_t N = op.n_nodes();
  if (N < 6) throw DomainError("navier_energy_matrix: grid too small");
  const std::size_t M = N - 2;  // interior nodes
  const double nd = op.params.n;
  const double lam = eigenvalue(op.l, op.params.n);
  const double c2 = -(2 * lam + (nd * (nd - 4) + 8) / 2);
  const double c0_base = lam * lam + nd * (nd - 4) / 2 * lam +
                         nd * nd * (nd - 4) * (nd - 4) / 16;
  const double cpot = nd * (nd + 4) * (nd * nd - 4) / 16;
  const double h2 = op.h * op.h, h4 = h2 * h2;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<int>(M),
                                            static_cast<int>(M));
  auto add = [&](std::size_t i, std::size_t j, double v) {
    if (j < M) A(static_cast<int>(i), static_cast<int>(j)) += v;
  };
  for (std::size_t i = 0; i < M; ++i) {
    // w'''' ~ [1 -4 6 -4 1]/h^4 with odd ghosts across both Navier ends.
    double diag = 6.0 / h4;
    if (i == 0 || i == M - 1) diag -= 1.0 / h4;
    add(i, i, diag);
    if (i >= 1) add(i, i - 1, -4.0 / h4);
    if (i + 1 < M) add(i, i + 1, -4.0 / h4);
    if (i >= 2) add(i, i - 2, 1.0 / h4);
    if (i + 2 < M) add(i, i + 2, 1.0 / h4);
    // c2 w'' ~ c2 [1 -2 1]/h^2.
    add(i, i, -2.0 * c2 / h2);
    if (i >= 1) add(i, i - 1, c2 / h2);
    if (i + 1 < M) add(i, i + 1, c2 / h2);
    add(i, i, c0_base - cpot * op.potential[i + 1]);
  }
  return A;
}

}  // namespace qflow

#endif  // QFLOW_CYLINDER_HPP
