#pragma once
// Value-function equations.
//
// Optimal pair (backward from P_T = Q', r_T = 0):
//   dP/dt = -(A^T P + P A + Q - P B R^-1 B^T P)
//   dr/dt = -tr(sigma^T P sigma) - (tau/2) log(|R_t| / (tau*pi)^k)
//
// Policy pair for a fixed policy (K, Sigma), with Acl = A - B K:
//   dP/dt = -(Acl^T P + P Acl + Q + K^T R K)
//   dr/dt = -tr(sigma^T P sigma) - tr(Sigma R) + (tau/2)[k + log((2pi)^k |Sigma|)]
//
// State second moment (forward from y_0 = S0 + m0 m0^T):
//   dy/dt = Acl y + y Acl^T + sigma sigma^T
//
// The value of a policy is tr(P_0 y_0) + r_0.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/integrate.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"

namespace ctlqr {

struct ValueSolution {
  MatrixPath P;  // n x n, symmetric
  MatrixPath r;  // 1 x 1
};

namespace detail {

inline std::string stage_label(int stage) {
  if (stage % 2 == 0) return "node " + std::to_string(stage / 2);
  return "midpoint of interval " + std::to_string((stage - 1) / 2);
}

inline MatrixPath wrap_matrix_nodes(const TimeGrid& g, std::vector<Eigen::MatrixXd> vals) {
  return MatrixPath(g, std::move(vals));
}

inline MatrixPath wrap_scalar_nodes(const TimeGrid& g, const std::vector<double>& vals) {
  std::vector<Eigen::MatrixXd> ms(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    ms[i] = Eigen::MatrixXd::Constant(1, 1, vals[i]);
  }
  return MatrixPath(g, std::move(ms));
}

inline void ensure_finite(const std::vector<Eigen::MatrixXd>& path, const std::string& what) {
  for (std::size_t j = 0; j < path.size(); ++j)
    if (!path[j].allFinite())
      throw NumericalError(what + " diverged (non-finite value at node " +
                           std::to_string(j) + ")");
}

inline void ensure_finite(const std::vector<MatrixScalarState>& path, const std::string& what) {
  for (std::size_t j = 0; j < path.size(); ++j)
    if (!path[j].m.allFinite() || !std::isfinite(path[j].s))
      throw NumericalError(what + " diverged (non-finite value at node " +
                           std::to_string(j) + ")");
}

// Per-stage tables shared by the optimal-equation right-hand sides.
struct OptimalStages {
  std::vector<Eigen::MatrixXd> A, S, Q, W;  // S = B R^-1 B^T, W = sigma sigma^T
  std::vector<double> c;                    // (tau/2) log(|R_t| / (tau*pi)^k)
};

inline OptimalStages optimal_stages(const LQRModel& m) {
  if (!(m.tau() > 0.0))
    throw ValidationError("optimal value equation needs tau > 0");
  OptimalStages st;
  st.A = stage_values(m.A());
  st.Q = stage_values(m.Q());
  const auto B = stage_values(m.B());
  const auto R = stage_values(m.R());
  const auto sg = stage_values(m.sigma());
  const std::size_t S = st.A.size();
  st.S.resize(S);
  st.W.resize(S);
  st.c.resize(S);
  const double logTauPi = std::log(m.tau() * M_PI);
  for (std::size_t s = 0; s < S; ++s) {
    const Eigen::MatrixXd Rinv = spd_inverse(R[s], "R at " + stage_label(static_cast<int>(s)));
    st.S[s] = B[s] * Rinv * B[s].transpose();
    st.W[s] = sg[s] * sg[s].transpose();
    st.c[s] = 0.5 * m.tau() *
              (log_det_spd(R[s], "R at " + stage_label(static_cast<int>(s))) -
               m.k() * logTauPi);
  }
  return st;
}

// Per-stage tables for the policy equations. The entropy/action term e is
// filled only when a Sigma path is supplied.
struct PolicyStages {
  std::vector<Eigen::MatrixXd> Acl, C, W;  // Acl = A - B K, C = Q + K^T R K
  std::vector<double> e;                   // tr(Sigma R) - (tau/2)[k + log((2pi)^k |Sigma|)]
};

inline PolicyStages policy_stages(const LQRModel& m, const MatrixPath& K,
                                  const MatrixPath* Sigma) {
  if (K.grid() != m.grid()) throw ShapeError("K: path grid differs from model grid");
  if (K.rows() != m.k() || K.cols() != m.n())
    throw ShapeError("K: expected " + std::to_string(m.k()) + "x" + std::to_string(m.n()));
  PolicyStages st;
  const auto A = stage_values(m.A());
  const auto B = stage_values(m.B());
  const auto Q = stage_values(m.Q());
  const auto R = stage_values(m.R());
  const auto sg = stage_values(m.sigma());
  const auto Ks = stage_values(K);
  const std::size_t S = A.size();
  st.Acl.resize(S);
  st.C.resize(S);
  st.W.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    st.Acl[s] = A[s] - B[s] * Ks[s];
    st.C[s] = Q[s] + Ks[s].transpose() * R[s] * Ks[s];
    st.W[s] = sg[s] * sg[s].transpose();
  }
  if (Sigma != nullptr) {
    if (Sigma->grid() != m.grid()) throw ShapeError("Sigma: path grid differs from model grid");
    if (Sigma->rows() != m.k() || Sigma->cols() != m.k())
      throw ShapeError("Sigma: expected " + std::to_string(m.k()) + "x" +
                       std::to_string(m.k()));
    if (!(m.tau() > 0.0)) throw ValidationError("policy value equation needs tau > 0");
    const auto Sg = stage_values(*Sigma);
    st.e.resize(S);
    const double log2pi = std::log(2.0 * M_PI);
    for (std::size_t s = 0; s < S; ++s) {
      const double logDet =
          log_det_spd(Sg[s], "Sigma at " + stage_label(static_cast<int>(s)));
      st.e[s] = (Sg[s].cwiseProduct(R[s])).sum() -
                0.5 * m.tau() * (m.k() + m.k() * log2pi + logDet);
    }
  }
  return st;
}

// Backward matrix equation for a fixed gain path, no scalar component.
inline MatrixPath solve_policy_value_matrix(const LQRModel& m, const MatrixPath& K) {
  const PolicyStages st = policy_stages(m, K, nullptr);
  auto rhs = [&st](int s, const Eigen::MatrixXd& P) -> Eigen::MatrixXd {
    return -(st.Acl[s].transpose() * P + P * st.Acl[s] + st.C[s]);
  };
  std::vector<Eigen::MatrixXd> path = rk4_backward(m.grid(), m.Qprime(), rhs);
  ensure_finite(path, "policy value equation");
  return wrap_matrix_nodes(m.grid(), std::move(path));
}

}  // namespace detail

// Optimal value pair (P, r). P is integrated jointly with r in a single
// fourth-order pass; P_T equals the model's terminal weight exactly.
inline ValueSolution solve_optimal_riccati(const LQRModel& m) {
  const detail::OptimalStages st = detail::optimal_stages(m);
  auto rhs = [&st](int s, const MatrixScalarState& y) -> MatrixScalarState {
    MatrixScalarState d;
    d.m = -(st.A[s].transpose() * y.m + y.m * st.A[s] + st.Q[s] - y.m * st.S[s] * y.m);
    d.s = -(st.W[s].cwiseProduct(y.m)).sum() - st.c[s];
    return d;
  };
  MatrixScalarState terminal{m.Qprime(), 0.0};
  std::vector<MatrixScalarState> path = rk4_backward(m.grid(), terminal, rhs);
  detail::ensure_finite(path, "optimal value equation");
  std::vector<Eigen::MatrixXd> Pv(path.size());
  std::vector<double> rv(path.size());
  for (std::size_t j = 0; j < path.size(); ++j) {
    Pv[j] = path[j].m;
    rv[j] = path[j].s;
  }
  return {detail::wrap_matrix_nodes(m.grid(), std::move(Pv)),
          detail::wrap_scalar_nodes(m.grid(), rv)};
}

// Value pair (P, r) of a fixed Gaussian policy.
inline ValueSolution solve_policy_riccati(const LQRModel& m, const GaussianPolicy& pol) {
  const detail::PolicyStages st = detail::policy_stages(m, pol.K(), &pol.Sigma());
  auto rhs = [&st](int s, const MatrixScalarState& y) -> MatrixScalarState {
    MatrixScalarState d;
    d.m = -(st.Acl[s].transpose() * y.m + y.m * st.Acl[s] + st.C[s]);
    d.s = -(st.W[s].cwiseProduct(y.m)).sum() - st.e[s];
    return d;
  };
  MatrixScalarState terminal{m.Qprime(), 0.0};
  std::vector<MatrixScalarState> path = rk4_backward(m.grid(), terminal, rhs);
  detail::ensure_finite(path, "policy value equation");
  std::vector<Eigen::MatrixXd> Pv(path.size());
  std::vector<double> rv(path.size());
  for (std::size_t j = 0; j < path.size(); ++j) {
    Pv[j] = path[j].m;
    rv[j] = path[j].s;
  }
  return {detail::wrap_matrix_nodes(m.grid(), std::move(Pv)),
          detail::wrap_scalar_nodes(m.grid(), rv)};
}

// Second moment y_t = E[x_t x_t^T] of the closed-loop state under the policy.
// Only the gain enters: the action noise is additive in the control channel
// and its effect on the state mean/covariance cancels in this formulation.
inline MatrixPath solve_state_moment(const LQRModel& m, const GaussianPolicy& pol) {
  const detail::PolicyStages st = detail::policy_stages(m, pol.K(), nullptr);
  auto rhs = [&st](int s, const Eigen::MatrixXd& y) -> Eigen::MatrixXd {
    return st.Acl[s] * y + y * st.Acl[s].transpose() + st.W[s];
  };
  std::vector<Eigen::MatrixXd> path =
      rk4_forward(m.grid(), second_moment_initial(m.init()), rhs);
  detail::ensure_finite(path, "state moment equation");
  return detail::wrap_matrix_nodes(m.grid(), std::move(path));
}

struct ContinuityProbe {
  double supNormDeltaP = 0.0;  // sup over nodes of ||P - P~||_2
  double inputDistance = 0.0;  // parameter distance between the two models
};

// Solves the optimal equation for both models and reports how far the value
// paths drift per unit of parameter distance.
inline ContinuityProbe riccati_continuity_probe(const LQRModel& base,
                                                const LQRModel& perturbed) {
  ContinuityProbe probe;
  probe.inputDistance = model_parameter_distance(base, perturbed);
  const ValueSolution a = solve_optimal_riccati(base);
  const ValueSolution b = solve_optimal_riccati(perturbed);
  for (int j = 0; j < base.grid().nodes(); ++j)
    probe.supNormDeltaP =
        std::max(probe.supNormDeltaP, spectral_norm(a.P.value(j) - b.P.value(j)));
  return probe;
}

}  // namespace ctlqr
