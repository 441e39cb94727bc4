#pragma once
// Independent cross-checks for the solvers: a closed-form scalar value
// function, a Monte Carlo cost estimator that never touches the value
// equations, and grid-refinement order measurements.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/integrate.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/policy.hpp"
#include "ctlqr/riccati.hpp"
#include "ctlqr/rng.hpp"

namespace ctlqr {

// Closed-form solution of the scalar terminal-value problem
//   dP/dt = -(2 a P + q - (b^2/r) P^2),  P(T) = qprime,
// evaluated at time t. Valid for r > 0, q >= 0, qprime >= 0, where the
// solution cannot blow up. Cases:
//   b = 0:            linear equation, exponential/affine solution
//   a = 0, q = 0:     P = qprime / (1 + (b^2/r) qprime (T - t))
//   otherwise:        two equilibria lam+- = (a +- s)/c, s = sqrt(a^2 + c q),
//                     c = b^2/r, and P = (lam+ - lam- u)/(1 - u) with
//                     u = u_T e^{-2 s (T - t)}, u_T = (qprime - lam+)/(qprime - lam-).
inline double analytic_scalar_riccati(double a, double b, double q, double r,
                                      double qprime, double T, double t) {
  if (!(r > 0.0)) throw ValidationError("analytic_scalar_riccati: r must be positive");
  if (q < 0.0 || qprime < 0.0)
    throw ValidationError("analytic_scalar_riccati: q and qprime must be nonnegative");
  if (!(T > 0.0) || t < 0.0 || t > T)
    throw ValidationError("analytic_scalar_riccati: need 0 <= t <= T");
  if (t == T) return qprime;  // exact terminal condition, no branch round-off

  const double c = b * b / r;
  const double dtT = T - t;
  if (c < 1e-300) {
    if (std::abs(a) < 1e-300) return qprime + q * dtT;
    const double E = std::exp(2.0 * a * dtT);
    return qprime * E + q * (E - 1.0) / (2.0 * a);
  }
  const double s = std::sqrt(a * a + c * q);
  if (s < 1e-300) return qprime / (1.0 + c * qprime * dtT);

  const double lamPlus = (a + s) / c;
  const double lamMinus = (a - s) / c;
  const double u = (qprime - lamPlus) / (qprime - lamMinus) * std::exp(-2.0 * s * dtT);
  if (!std::isfinite(u) || std::abs(u) > 1e100) return lamMinus;  // u -> +-inf limit
  const double denom = 1.0 - u;
  if (std::abs(denom) < 1e-300)
    throw NumericalError("analytic_scalar_riccati: solution blows up");
  return (lamPlus - lamMinus * u) / denom;
}

struct MCCostEstimate {
  double estimate = 0.0;
  double stdError = 0.0;
  int paths = 0;
};

// Monte Carlo estimate of the policy cost by direct simulation: Euler-Maruyama
// state updates on the model grid with actions sampled from the policy, the
// running integrand (state cost, action cost, and tau times the policy
// log-density at the sampled action) accumulated with trapezoid weights.
// Path p draws from stream 2^32 + p: indices 0..n-1 initialize the state, then
// step j uses d Brownian draws at n + j*(d+k) and k action draws right after.
// Per-path costs are pairwise-summed, so the result is independent of
// accumulation order.
inline MCCostEstimate mc_cost(const LQRModel& m, const GaussianPolicy& pol, int paths,
                              std::uint64_t seed) {
  if (paths < 100)
    throw ValidationError("mc_cost: need at least 100 paths for a standard error");
  if (pol.grid() != m.grid()) throw ShapeError("mc_cost: policy grid differs from model grid");
  if (pol.K().rows() != m.k() || pol.K().cols() != m.n())
    throw ShapeError("mc_cost: policy gain must be k x n");

  const int N = m.grid().steps();
  const int n = m.n(), k = m.k(), d = m.d();
  const double h = m.grid().dt();
  const double sqrth = std::sqrt(h);
  const double tau = m.tau();
  const double halfKLog2pi = 0.5 * k * std::log(2.0 * M_PI);

  // Per-node tables. cholSigma is the lower Cholesky factor of Sigma_t; the
  // log-density of the sampled action reuses the standard normal draws.
  std::vector<Eigen::MatrixXd> A(N + 1), B(N + 1), K(N + 1), Q(N + 1), R(N + 1),
      Ssc(N + 1), cholSigma(N + 1);
  std::vector<double> logNorm(N + 1);
  for (int j = 0; j <= N; ++j) {
    A[j] = m.A().value(j);
    B[j] = m.B().value(j);
    K[j] = pol.K().value(j);
    Q[j] = m.Q().value(j);
    R[j] = m.R().value(j);
    Ssc[j] = sqrth * m.sigma().value(j);
    Eigen::LLT<Eigen::MatrixXd> llt(pol.Sigma().value(j));
    if (llt.info() != Eigen::Success)
      throw NumericalError("mc_cost: policy covariance not positive definite at node " +
                           std::to_string(j));
    cholSigma[j] = llt.matrixL();
    logNorm[j] = cholSigma[j].diagonal().array().log().sum() + halfKLog2pi;
  }
  const Eigen::MatrixXd L0 = sqrt_psd(m.init().cov);
  const Eigen::MatrixXd& Qp = m.Qprime();

  // Flat row-major copies of the node tables keep the path loop free of
  // Eigen call overhead; the dimensions here are tiny.
  auto flatten = [](const std::vector<Eigen::MatrixXd>& ms) {
    std::vector<double> flat;
    if (ms.empty()) return flat;
    const std::size_t sz = ms[0].size();
    flat.resize(ms.size() * sz);
    for (std::size_t j = 0; j < ms.size(); ++j)
      for (int r2 = 0; r2 < ms[j].rows(); ++r2)
        for (int c2 = 0; c2 < ms[j].cols(); ++c2)
          flat[j * sz + r2 * ms[j].cols() + c2] = ms[j](r2, c2);
    return flat;
  };
  const std::vector<double> fA = flatten(A), fB = flatten(B), fK = flatten(K),
                            fQ = flatten(Q), fR = flatten(R), fS = flatten(Ssc),
                            fL = flatten(cholSigma);

  std::vector<double> costs(paths);
  int divergedPath = -1;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < paths; ++p) {
    std::vector<double> ws(2 * n + 2 * k + d);
    double* x = ws.data();
    double* xnext = x + n;
    double* u = xnext + n;
    double* zeta = u + k;
    double* xi = zeta + k;
    RandomStream rs(seed, (1ULL << 32) + static_cast<std::uint64_t>(p));
    for (int a = 0; a < n; ++a) {
      x[a] = m.init().mean(a);
      for (int b = 0; b < n; ++b) x[a] += L0(a, b) * rs.normal(b);
    }
    double total = 0.0;
    std::uint64_t idx = n;
    for (int j = 0; j <= N; ++j) {
      const double* Kj = fK.data() + static_cast<std::size_t>(j) * k * n;
      const double* Lj = fL.data() + static_cast<std::size_t>(j) * k * k;
      const double* Qj = fQ.data() + static_cast<std::size_t>(j) * n * n;
      const double* Rj = fR.data() + static_cast<std::size_t>(j) * k * k;
      double zsq = 0.0;
      for (int c = 0; c < k; ++c) {
        zeta[c] = rs.normal(idx + d + c);
        zsq += zeta[c] * zeta[c];
      }
      for (int a = 0; a < k; ++a) {
        double acc = 0.0;
        for (int b = 0; b <= a; ++b) acc += Lj[a * k + b] * zeta[b];
        for (int b = 0; b < n; ++b) acc -= Kj[a * n + b] * x[b];
        u[a] = acc;
      }
      double integrand = tau * (-0.5 * zsq - logNorm[j]);
      for (int a = 0; a < n; ++a) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) acc += Qj[a * n + b] * x[b];
        integrand += x[a] * acc;
      }
      for (int a = 0; a < k; ++a) {
        double acc = 0.0;
        for (int b = 0; b < k; ++b) acc += Rj[a * k + b] * u[b];
        integrand += u[a] * acc;
      }
      total += (j == 0 || j == N) ? 0.5 * h * integrand : h * integrand;
      if (j < N) {
        const double* Aj = fA.data() + static_cast<std::size_t>(j) * n * n;
        const double* Bj = fB.data() + static_cast<std::size_t>(j) * n * k;
        const double* Sj = fS.data() + static_cast<std::size_t>(j) * n * d;
        for (int c = 0; c < d; ++c) xi[c] = rs.normal(idx + c);
        for (int a = 0; a < n; ++a) {
          double drift = 0.0;
          for (int b = 0; b < n; ++b) drift += Aj[a * n + b] * x[b];
          for (int b = 0; b < k; ++b) drift += Bj[a * k + b] * u[b];
          double noise = 0.0;
          for (int b = 0; b < d; ++b) noise += Sj[a * d + b] * xi[b];
          xnext[a] = x[a] + h * drift + noise;
        }
        for (int a = 0; a < n; ++a) x[a] = xnext[a];
        idx += d + k;
      }
    }
    for (int a = 0; a < n; ++a) {
      double acc = 0.0;
      for (int b = 0; b < n; ++b) acc += Qp(a, b) * x[b];
      total += x[a] * acc;
    }
    if (!std::isfinite(total)) {
#pragma omp critical
      divergedPath = p;
      total = 0.0;
    }
    costs[p] = total;
  }
  if (divergedPath >= 0)
    throw NumericalError("mc_cost: path " + std::to_string(divergedPath) + " diverged");

  MCCostEstimate out;
  out.paths = paths;
  out.estimate = pairwise_sum(costs) / paths;
  std::vector<double> sq(paths);
  for (int p = 0; p < paths; ++p) {
    const double dcost = costs[p] - out.estimate;
    sq[p] = dcost * dcost;
  }
  out.stdError = std::sqrt(pairwise_sum(sq) / (static_cast<double>(paths) - 1.0) /
                           static_cast<double>(paths));
  return out;
}

enum class SolverKind { OptimalValue, PolicyValue, StateMoment };

struct RefinementPoint {
  int N = 0;
  double errorVsRef = 0.0;
  // log(err_prev/err_this) / log(N_this/N_prev); NaN for the first entry or
  // when an error vanishes.
  double observedOrder = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline bool path_constant(const MatrixPath& p) {
  for (int j = 1; j < p.grid().nodes(); ++j)
    if (p.value(j) != p.value(0)) return false;
  return true;
}

inline MatrixPath refinement_solve(const LQRModel& m, SolverKind kind) {
  switch (kind) {
    case SolverKind::OptimalValue:
      return solve_optimal_riccati(m).P;
    case SolverKind::PolicyValue:
      return solve_policy_value_matrix(
          m, MatrixPath::constant(m.grid(), Eigen::MatrixXd::Zero(m.k(), m.n())));
    case SolverKind::StateMoment: {
      const MatrixPath K0 =
          MatrixPath::constant(m.grid(), Eigen::MatrixXd::Zero(m.k(), m.n()));
      const GaussianPolicy pol(K0, ipo_sigma(m), 1e-300);
      return solve_state_moment(m, pol);
    }
  }
  throw ValidationError("refinement_order: unknown solver kind");
}

}  // namespace detail

// Solves on each grid in Ns and reports sup-node errors against a reference:
// the closed-form solution when the problem is scalar with constant
// coefficients and the kind is OptimalValue, otherwise the finest-grid
// solution evaluated at the coarse nodes (exact when the step counts are
// integer multiples). PolicyValue and StateMoment use the zero gain.
inline std::vector<RefinementPoint> refinement_order(const LQRModel& m, SolverKind kind,
                                                     const std::vector<int>& Ns) {
  if (Ns.size() < 2) throw ValidationError("refinement_order: need at least two grids");
  for (std::size_t i = 1; i < Ns.size(); ++i)
    if (Ns[i] <= Ns[i - 1])
      throw ValidationError("refinement_order: step counts must be strictly increasing");
  if (Ns.back() < 4 * Ns.front())
    throw ValidationError("refinement_order: step counts must span at least a factor of 4");

  const bool analytic = kind == SolverKind::OptimalValue && m.n() == 1 && m.k() == 1 &&
                        detail::path_constant(m.A()) && detail::path_constant(m.B()) &&
                        detail::path_constant(m.Q()) && detail::path_constant(m.R());

  std::vector<MatrixPath> solutions;
  solutions.reserve(Ns.size());
  for (int N : Ns) solutions.push_back(detail::refinement_solve(resample_model(m, N), kind));

  std::vector<RefinementPoint> out(Ns.size());
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    const MatrixPath& sol = solutions[i];
    double err = 0.0;
    if (analytic) {
      const double a = m.A().value(0)(0, 0);
      const double b = m.B().value(0)(0, 0);
      const double q = m.Q().value(0)(0, 0);
      const double r = m.R().value(0)(0, 0);
      const double qp = m.Qprime()(0, 0);
      const double T = m.grid().horizon();
      for (int j = 0; j < sol.grid().nodes(); ++j) {
        const double exact = analytic_scalar_riccati(a, b, q, r, qp, T, sol.grid().node(j));
        err = std::max(err, std::abs(sol.value(j)(0, 0) - exact));
      }
    } else {
      const MatrixPath& ref = solutions.back();
      for (int j = 0; j < sol.grid().nodes(); ++j)
        err = std::max(err, spectral_norm(sol.value(j) - ref.eval(sol.grid().node(j))));
    }
    out[i].N = Ns[i];
    out[i].errorVsRef = err;
    if (i > 0 && out[i - 1].errorVsRef > 0.0 && err > 0.0)
      out[i].observedOrder = std::log(out[i - 1].errorVsRef / err) /
                             std::log(static_cast<double>(Ns[i]) / Ns[i - 1]);
  }
  return out;
}

}  // namespace ctlqr
