#pragma once
// Problem data for the entropy-regularized linear-quadratic control problem
//
//   dx_t = (A_t x_t + B_t u_t) dt + sigma_t dW_t,      x_0 ~ N(m0, S0)
//   cost = E int_0^T [ x^T Q_t x + u^T R_t u + tau log pi(u|x) ] dt + x_T^T Q' x_T
//
// with Gaussian relaxed policies pi(.|x) = N(-K_t x, Sigma_t).
//
// Construction enforces shapes and symmetrizes symmetric slots (recording how
// far the input was from symmetric). Assumption-level conditions (definiteness
// floors, positive temperature, nondegenerate start) are checked separately by
// validate_model so callers can report every violation at once.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/linalg.hpp"

namespace ctlqr {

struct InitialDistribution {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;             // symmetrized on construction
  double covSymmetryDeviation = 0.0;

  InitialDistribution(Eigen::VectorXd m, const Eigen::MatrixXd& c)
      : mean(std::move(m)) {
    if (c.rows() != c.cols()) throw ShapeError("InitialDistribution: cov must be square");
    if (c.rows() != mean.size())
      throw ShapeError("InitialDistribution: mean/cov dimension mismatch");
    covSymmetryDeviation = symmetry_deviation(c);
    cov = symmetrize(c);
  }
};

// E[x_0 x_0^T] = S0 + m0 m0^T.
inline Eigen::MatrixXd second_moment_initial(const InitialDistribution& init) {
  return init.cov + init.mean * init.mean.transpose();
}

namespace detail {
inline void check_path(const MatrixPath& p, const TimeGrid& g, Eigen::Index r,
                       Eigen::Index c, const std::string& name) {
  if (p.grid() != g) throw ShapeError(name + ": path grid differs from model grid");
  if (p.rows() != r || p.cols() != c)
    throw ShapeError(name + ": expected " + std::to_string(r) + "x" + std::to_string(c) +
                     ", got " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()));
}

inline MatrixPath symmetrized_path(MatrixPath p, double& maxDeviation) {
  for (int j = 0; j < p.grid().nodes(); ++j) {
    maxDeviation = std::max(maxDeviation, symmetry_deviation(p.value(j)));
    p.value(j) = symmetrize(p.value(j));
  }
  return p;
}
}  // namespace detail

class LQRModel {
 public:
  LQRModel(TimeGrid grid, MatrixPath A, MatrixPath B, MatrixPath Q, MatrixPath R,
           MatrixPath sigma, Eigen::MatrixXd Qprime, double tau, double deltaFloor,
           InitialDistribution init)
      : grid_(grid),
        A_(std::move(A)),
        B_(std::move(B)),
        Q_(std::move(Q)),
        R_(std::move(R)),
        sigma_(std::move(sigma)),
        tau_(tau),
        deltaFloor_(deltaFloor),
        init_(std::move(init)) {
    const Eigen::Index n = A_.rows();
    detail::check_path(A_, grid_, n, n, "A");
    const Eigen::Index k = B_.cols();
    detail::check_path(B_, grid_, n, k, "B");
    detail::check_path(Q_, grid_, n, n, "Q");
    detail::check_path(R_, grid_, k, k, "R");
    if (sigma_.rows() != n) throw ShapeError("sigma: row count must match state dimension");
    detail::check_path(sigma_, grid_, n, sigma_.cols(), "sigma");
    if (Qprime.rows() != n || Qprime.cols() != n)
      throw ShapeError("Qprime: must be n x n");
    if (init_.mean.size() != n)
      throw ShapeError("init: dimension must match state dimension");
    if (!(deltaFloor_ > 0.0)) throw ShapeError("deltaFloor: must be positive");

    Q_ = detail::symmetrized_path(std::move(Q_), symmetryDeviation_);
    R_ = detail::symmetrized_path(std::move(R_), symmetryDeviation_);
    symmetryDeviation_ = std::max(symmetryDeviation_, symmetry_deviation(Qprime));
    Qprime_ = symmetrize(Qprime);
    symmetryDeviation_ = std::max(symmetryDeviation_, init_.covSymmetryDeviation);
  }

  const TimeGrid& grid() const { return grid_; }
  int n() const { return static_cast<int>(A_.rows()); }
  int k() const { return static_cast<int>(B_.cols()); }
  int d() const { return static_cast<int>(sigma_.cols()); }

  const MatrixPath& A() const { return A_; }
  const MatrixPath& B() const { return B_; }
  const MatrixPath& Q() const { return Q_; }
  const MatrixPath& R() const { return R_; }
  const MatrixPath& sigma() const { return sigma_; }
  const Eigen::MatrixXd& Qprime() const { return Qprime_; }
  double tau() const { return tau_; }
  double deltaFloor() const { return deltaFloor_; }
  const InitialDistribution& init() const { return init_; }
  // Worst asymmetry seen in any symmetric slot before symmetrization.
  double symmetryDeviation() const { return symmetryDeviation_; }

  LQRModel with_Qprime(const Eigen::MatrixXd& Qp) const {
    LQRModel m = *this;
    if (Qp.rows() != n() || Qp.cols() != n()) throw ShapeError("with_Qprime: must be n x n");
    m.Qprime_ = symmetrize(Qp);
    return m;
  }

 private:
  TimeGrid grid_;
  MatrixPath A_, B_, Q_, R_, sigma_;
  Eigen::MatrixXd Qprime_;
  double tau_;
  double deltaFloor_;
  InitialDistribution init_;
  double symmetryDeviation_ = 0.0;
};

class GaussianPolicy {
 public:
  GaussianPolicy(MatrixPath K, MatrixPath Sigma, double sigmaFloor)
      : K_(std::move(K)), Sigma_(std::move(Sigma)), sigmaFloor_(sigmaFloor) {
    if (Sigma_.grid() != K_.grid())
      throw ShapeError("GaussianPolicy: K and Sigma on different grids");
    if (Sigma_.rows() != K_.rows() || Sigma_.cols() != K_.rows())
      throw ShapeError("GaussianPolicy: Sigma must be k x k with k = rows(K)");
    if (!(sigmaFloor_ > 0.0)) throw ShapeError("GaussianPolicy: sigmaFloor must be positive");
    double dev = 0.0;
    Sigma_ = detail::symmetrized_path(std::move(Sigma_), dev);
    symmetryDeviation_ = dev;
  }

  const TimeGrid& grid() const { return K_.grid(); }
  const MatrixPath& K() const { return K_; }
  const MatrixPath& Sigma() const { return Sigma_; }
  double sigmaFloor() const { return sigmaFloor_; }
  double symmetryDeviation() const { return symmetryDeviation_; }

 private:
  MatrixPath K_;
  MatrixPath Sigma_;
  double sigmaFloor_;
  double symmetryDeviation_ = 0.0;
};

struct ValidationIssue {
  std::string condition;  // human-readable statement of the violated condition
  int node = -1;          // grid node index, or -1 for node-independent conditions
  double evidence = 0.0;  // offending eigenvalue / deviation / value
};

// Checks every standing-assumption condition and returns all violations.
// Pure function of the model; an empty result means the model is admissible.
inline std::vector<ValidationIssue> validate_model(const LQRModel& m) {
  constexpr double tol = 1e-12;
  std::vector<ValidationIssue> issues;
  const int N = m.grid().steps();

  if (!(m.tau() > 0.0))
    issues.push_back({"tau > 0", -1, m.tau()});

  for (int j = 0; j <= N; ++j) {
    const double qmin = min_eigenvalue_sym(m.Q().value(j));
    if (qmin < -tol) issues.push_back({"Q_t >= 0", j, qmin});
    const double rmin =
        min_eigenvalue_sym(m.R().value(j) -
                           m.deltaFloor() * Eigen::MatrixXd::Identity(m.k(), m.k()));
    if (rmin < -tol) issues.push_back({"R_t - delta*I >= 0", j, rmin});
  }

  const double qpmin = min_eigenvalue_sym(m.Qprime());
  if (qpmin < -tol) issues.push_back({"Qprime >= 0", -1, qpmin});

  if (m.symmetryDeviation() > tol)
    issues.push_back({"symmetric slots symmetric", -1, m.symmetryDeviation()});

  const double s0min = min_eigenvalue_sym(m.init().cov);
  if (s0min < -tol) issues.push_back({"S0 >= 0", -1, s0min});

  // Nondegenerate start: E[x_0 x_0^T] must be strictly positive definite.
  const double ymin = min_eigenvalue_sym(second_moment_initial(m.init()));
  if (ymin <= tol) issues.push_back({"S0 + m0 m0^T > 0", -1, ymin});

  return issues;
}

// Policy admissibility: Sigma_t stays above the floor at every node.
inline std::vector<ValidationIssue> validate_policy(const GaussianPolicy& p) {
  constexpr double tol = 1e-12;
  std::vector<ValidationIssue> issues;
  const int k = static_cast<int>(p.K().rows());
  for (int j = 0; j < p.grid().nodes(); ++j) {
    const double smin = min_eigenvalue_sym(
        p.Sigma().value(j) - p.sigmaFloor() * Eigen::MatrixXd::Identity(k, k));
    if (smin < -tol) issues.push_back({"Sigma_t - delta1*I >= 0", j, smin});
  }
  if (p.symmetryDeviation() > tol)
    issues.push_back({"Sigma_t symmetric", -1, p.symmetryDeviation()});
  return issues;
}

// Parameter distance used by the continuity probe and the transfer experiment:
// sup-norm over nodes of the spectral norm for each time-varying slot, plus
// the spectral norm of the terminal-weight difference.
inline double model_parameter_distance(const LQRModel& a, const LQRModel& b) {
  if (a.grid() != b.grid() || a.n() != b.n() || a.k() != b.k())
    throw ShapeError("model_parameter_distance: incompatible models");
  double dA = 0.0, dB = 0.0, dQ = 0.0, dR = 0.0;
  for (int j = 0; j < a.grid().nodes(); ++j) {
    dA = std::max(dA, spectral_norm(a.A().value(j) - b.A().value(j)));
    dB = std::max(dB, spectral_norm(a.B().value(j) - b.B().value(j)));
    dQ = std::max(dQ, spectral_norm(a.Q().value(j) - b.Q().value(j)));
    dR = std::max(dR, spectral_norm(a.R().value(j) - b.R().value(j)));
  }
  return dA + dB + dQ + dR + spectral_norm(a.Qprime() - b.Qprime());
}

namespace detail {
inline MatrixPath resample_path(const MatrixPath& p, const TimeGrid& g) {
  std::vector<Eigen::MatrixXd> vals;
  vals.reserve(g.nodes());
  for (int j = 0; j < g.nodes(); ++j) vals.push_back(p.eval(g.node(j)));
  return MatrixPath(g, std::move(vals));
}
}  // namespace detail

// Same problem data re-gridded to N steps (paths resampled linearly).
inline LQRModel resample_model(const LQRModel& m, int N) {
  TimeGrid g(m.grid().horizon(), N);
  return LQRModel(g, detail::resample_path(m.A(), g), detail::resample_path(m.B(), g),
                  detail::resample_path(m.Q(), g), detail::resample_path(m.R(), g),
                  detail::resample_path(m.sigma(), g), m.Qprime(), m.tau(),
                  m.deltaFloor(), m.init());
}

}  // namespace ctlqr
