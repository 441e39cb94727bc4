#pragma once
// Gaussian policies: the optimal policy, policy values, and the gain-gap
// matrices behind the cost-difference identity
//
//   C(K') - C(K) = int_0^T < y^{K'}_t , G(t, K', K) >_F dt
//
// with G(t, K', K) = P^K B (K - K') + (B (K - K'))^T P^K + K'^T R K' - K^T R K.
// The special case G(t, K) = -G(t, R^-1 B^T P^K, K) is positive semidefinite
// and vanishes exactly at the fixed point K = R^-1 B^T P^K.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/integrate.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/riccati.hpp"

namespace ctlqr {

// Covariance of the optimal policy: (tau/2) R_t^-1 at every node.
inline MatrixPath ipo_sigma(const LQRModel& m) {
  if (!(m.tau() > 0.0)) throw ValidationError("ipo_sigma needs tau > 0");
  std::vector<Eigen::MatrixXd> vals(m.grid().nodes());
  for (int j = 0; j < m.grid().nodes(); ++j)
    vals[j] = 0.5 * m.tau() *
              spd_inverse(m.R().value(j), "R at node " + std::to_string(j));
  return MatrixPath(m.grid(), std::move(vals));
}

// N(-K*_t x, (tau/2) R_t^-1) with K*_t = R_t^-1 B_t^T P_t from the optimal
// value path. The covariance floor is set just below the smallest covariance
// eigenvalue over the horizon so the policy is admissible by construction.
inline GaussianPolicy optimal_policy(const LQRModel& m) {
  const ValueSolution sol = solve_optimal_riccati(m);
  std::vector<Eigen::MatrixXd> K(m.grid().nodes());
  MatrixPath Sigma = ipo_sigma(m);
  double floorEig = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m.grid().nodes(); ++j) {
    const Eigen::MatrixXd Rinv =
        spd_inverse(m.R().value(j), "R at node " + std::to_string(j));
    K[j] = Rinv * m.B().value(j).transpose() * sol.P.value(j);
    floorEig = std::min(floorEig, min_eigenvalue_sym(Sigma.value(j)));
  }
  const double sigmaFloor = std::max(floorEig * (1.0 - 1e-9), 1e-300);
  return GaussianPolicy(MatrixPath(m.grid(), std::move(K)), std::move(Sigma), sigmaFloor);
}

// C(K, Sigma) = tr(P^K_0 y_0) + r^{K,Sigma}_0.
inline double cost(const LQRModel& m, const GaussianPolicy& pol) {
  const ValueSolution sol = solve_policy_riccati(m, pol);
  const Eigen::MatrixXd y0 = second_moment_initial(m.init());
  return (sol.P.value(0).cwiseProduct(y0)).sum() + sol.r.value(0)(0, 0);
}

// G(t_j, K) evaluated from a precomputed policy value path.
inline Eigen::MatrixXd g_matrix(const LQRModel& m, const MatrixPath& K,
                                const MatrixPath& PK, int node) {
  const Eigen::MatrixXd& P = PK.value(node);
  const Eigen::MatrixXd& B = m.B().value(node);
  const Eigen::MatrixXd& R = m.R().value(node);
  const Eigen::MatrixXd& Kj = K.value(node);
  const Eigen::MatrixXd Rinv = spd_inverse(R, "R at node " + std::to_string(node));
  const Eigen::MatrixXd PB = P * B;
  return PB * Rinv * PB.transpose() + Kj.transpose() * R * Kj - PB * Kj -
         Kj.transpose() * PB.transpose();
}

inline Eigen::MatrixXd g_matrix(const LQRModel& m, const MatrixPath& K, int node) {
  return g_matrix(m, K, detail::solve_policy_value_matrix(m, K), node);
}

// G(t_j, K', K) evaluated from a precomputed value path of K.
inline Eigen::MatrixXd script_g_matrix(const LQRModel& m, const MatrixPath& Kp,
                                       const MatrixPath& K, const MatrixPath& PK,
                                       int node) {
  const Eigen::MatrixXd& P = PK.value(node);
  const Eigen::MatrixXd& B = m.B().value(node);
  const Eigen::MatrixXd& R = m.R().value(node);
  const Eigen::MatrixXd& Kj = K.value(node);
  const Eigen::MatrixXd& Kpj = Kp.value(node);
  const Eigen::MatrixXd PBdK = P * (B * (Kj - Kpj));
  return PBdK + PBdK.transpose() + Kpj.transpose() * R * Kpj - Kj.transpose() * R * Kj;
}

inline Eigen::MatrixXd script_g_matrix(const LQRModel& m, const MatrixPath& Kp,
                                       const MatrixPath& K, int node) {
  return script_g_matrix(m, Kp, K, detail::solve_policy_value_matrix(m, K), node);
}

struct CostDifferenceCheck {
  double lhs = 0.0;     // cost(policyA) - cost(policyB)
  double rhs = 0.0;     // int < y^{A}_t , G(t, K_A, K_B) > dt (trapezoid)
  double absGap = 0.0;  // |lhs - rhs|
};

// Verifies the cost-difference identity for two policies sharing a covariance
// path. policyA plays the role of K', policyB of K.
inline CostDifferenceCheck cost_difference_identity_check(const LQRModel& m,
                                                          const GaussianPolicy& policyA,
                                                          const GaussianPolicy& policyB) {
  if (policyA.grid() != m.grid() || policyB.grid() != m.grid())
    throw ShapeError("cost_difference_identity_check: policy grid differs from model grid");
  for (int j = 0; j < m.grid().nodes(); ++j)
    if (policyA.Sigma().value(j) != policyB.Sigma().value(j))
      throw ValidationError(
          "cost_difference_identity_check: policies must share the covariance path "
          "(differs at node " + std::to_string(j) + ")");

  CostDifferenceCheck out;
  out.lhs = cost(m, policyA) - cost(m, policyB);

  const MatrixPath PB = detail::solve_policy_value_matrix(m, policyB.K());
  const MatrixPath yA = solve_state_moment(m, policyA);
  std::vector<double> integrand(m.grid().nodes());
  for (int j = 0; j < m.grid().nodes(); ++j) {
    const Eigen::MatrixXd G = script_g_matrix(m, policyA.K(), policyB.K(), PB, j);
    integrand[j] = (yA.value(j).cwiseProduct(G)).sum();
  }
  out.rhs = trapezoid(m.grid(), integrand);
  out.absGap = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace ctlqr
