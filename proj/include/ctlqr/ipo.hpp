#pragma once
// Iterative policy optimization for the entropy-regularized problem.
//
// One step maps a gain path K to K' = R^-1 B^T P^K node by node, where P^K
// solves the policy value equation for K. The policy covariance is not
// iterated: (tau/2) R^-1 is optimal for any gain and is fixed throughout.
// The fixed point of the step is the optimal gain.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/integrate.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/policy.hpp"
#include "ctlqr/riccati.hpp"

namespace ctlqr {

// K' = R^-1 B^T P^K at every node.
inline MatrixPath ipo_step(const LQRModel& m, const MatrixPath& K) {
  const MatrixPath PK = detail::solve_policy_value_matrix(m, K);
  std::vector<Eigen::MatrixXd> Kp(m.grid().nodes());
  for (int j = 0; j < m.grid().nodes(); ++j) {
    const Eigen::MatrixXd Rinv =
        spd_inverse(m.R().value(j), "R at node " + std::to_string(j));
    Kp[j] = Rinv * m.B().value(j).transpose() * PK.value(j);
  }
  return MatrixPath(m.grid(), std::move(Kp));
}

enum class StopReason { Tolerance, MaxIter, Divergence };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Tolerance: return "tolerance";
    case StopReason::MaxIter: return "maxIter";
    case StopReason::Divergence: return "divergence";
  }
  return "unknown";
}

struct IPOTrace {
  std::vector<MatrixPath> iterates;   // K^(0), K^(1), ...
  std::vector<double> costs;          // C(K^(i), Sigma*)
  std::vector<double> gaps;           // costs[i] - optimalCost
  std::vector<double> l2dists;        // int ||K^(i) - K*||_2^2 dt
  double optimalCost = 0.0;           // C(K*, Sigma*)
  StopReason stopReason = StopReason::MaxIter;

  int iterations() const { return static_cast<int>(iterates.size()) - 1; }
};

// Runs the iteration from K0 until the gap falls to tol, the L^2 step
// increment falls to tol^2, maxIter steps were taken, or the cost rises
// (divergence). Every appended iterate has its cost evaluated, so the trace
// vectors share one length.
inline IPOTrace run_ipo(const LQRModel& m, const MatrixPath& K0, double tol, int maxIter) {
  if (!(tol > 0.0)) throw ValidationError("run_ipo: tol must be positive");
  if (maxIter < 1) throw ValidationError("run_ipo: maxIter must be at least 1");
  if (K0.grid() != m.grid()) throw ShapeError("run_ipo: K0 grid differs from model grid");
  if (K0.rows() != m.k() || K0.cols() != m.n())
    throw ShapeError("run_ipo: K0 must be k x n");

  const GaussianPolicy opt = optimal_policy(m);
  const MatrixPath& Kstar = opt.K();
  const MatrixPath& Sigma = opt.Sigma();
  const Eigen::MatrixXd y0 = second_moment_initial(m.init());

  auto evaluate = [&](const MatrixPath& K) {
    const GaussianPolicy pol(K, Sigma, opt.sigmaFloor());
    const ValueSolution sol = solve_policy_riccati(m, pol);
    return (sol.P.value(0).cwiseProduct(y0)).sum() + sol.r.value(0)(0, 0);
  };
  auto l2_between = [&](const MatrixPath& a, const MatrixPath& b) {
    std::vector<double> sq(m.grid().nodes());
    for (int j = 0; j < m.grid().nodes(); ++j) {
      const double nrm = spectral_norm(a.value(j) - b.value(j));
      sq[j] = nrm * nrm;
    }
    return trapezoid(m.grid(), sq);
  };

  IPOTrace trace;
  trace.optimalCost = evaluate(Kstar);

  MatrixPath K = K0;
  double lastIncrement = std::numeric_limits<double>::infinity();
  const double divergenceSlack = 1e-8;
  for (;;) {
    trace.iterates.push_back(K);
    trace.costs.push_back(evaluate(K));
    trace.gaps.push_back(trace.costs.back() - trace.optimalCost);
    trace.l2dists.push_back(l2_between(K, Kstar));

    if (trace.gaps.back() <= tol) {
      trace.stopReason = StopReason::Tolerance;
      break;
    }
    if (lastIncrement <= tol * tol) {
      trace.stopReason = StopReason::Tolerance;
      break;
    }
    const std::size_t i = trace.costs.size() - 1;
    if (i >= 1 && trace.costs[i] > trace.costs[i - 1] + divergenceSlack) {
      trace.stopReason = StopReason::Divergence;
      break;
    }
    if (trace.iterations() >= maxIter) {
      trace.stopReason = StopReason::MaxIter;
      break;
    }
    MatrixPath Knext = ipo_step(m, K);
    lastIncrement = l2_between(Knext, K);
    K = std::move(Knext);
  }
  return trace;
}

struct RateDiagnostics {
  // gaps[i+1]/gaps[i] for every i with gaps[i] above resolution.
  std::vector<double> linearRatios;
  // Indices i whose pair (gaps[i], gaps[i+1]) lies in the diagnostic window.
  std::vector<int> windowPairs;
  // gaps[i+1]/gaps[i]^(3/2) for each window pair.
  std::vector<double> superlinearConstants;
  // Least-squares slope of log gaps[i+1] against log gaps[i] over the window.
  double superlinearExponent = 0.0;
};

// Convergence-rate diagnostics over the window gaps[i] in [1e-10, 1e-2].
// Gaps at or below 1e-14 are treated as unresolved (dominated by grid and
// round-off error). Needs at least three resolved gaps and two window pairs.
inline RateDiagnostics rate_diagnostics(const IPOTrace& trace) {
  constexpr double resolution = 1e-14;
  constexpr double windowLo = 1e-10;
  constexpr double windowHi = 1e-2;

  const std::vector<double>& g = trace.gaps;
  int resolved = 0;
  for (double v : g)
    if (v > resolution) ++resolved;
  if (resolved < 3)
    throw DiagnosticWindowError(
        "rate_diagnostics: fewer than three gaps above resolution 1e-14 (" +
        std::to_string(resolved) + " resolved); start farther from the fixed point");

  RateDiagnostics out;
  for (std::size_t i = 0; i + 1 < g.size(); ++i)
    if (g[i] > resolution) out.linearRatios.push_back(g[i + 1] / g[i]);

  for (std::size_t i = 0; i + 1 < g.size(); ++i)
    if (g[i] >= windowLo && g[i] <= windowHi && g[i + 1] > 0.0)
      out.windowPairs.push_back(static_cast<int>(i));

  if (out.windowPairs.size() < 2)
    throw DiagnosticWindowError(
        "rate_diagnostics: fewer than two gap pairs inside the window [1e-10, 1e-2]");

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i : out.windowPairs) {
    const double x = std::log(g[i]);
    const double y = std::log(g[i + 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    out.superlinearConstants.push_back(g[i + 1] / std::pow(g[i], 1.5));
  }
  const double npts = static_cast<double>(out.windowPairs.size());
  out.superlinearExponent = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);
  return out;
}

}  // namespace ctlqr
