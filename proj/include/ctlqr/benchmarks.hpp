#pragma once
// Built-in benchmark problems used by the test suite and shipped as configs.

#include <Eigen/Dense>
#include <cmath>

#include "ctlqr/grid.hpp"
#include "ctlqr/model.hpp"

namespace ctlqr {

// Scalar problem with a known closed form: A = 0, B = R = sigma = Qprime = 1,
// Q = 0, so P(t) = 1/(1 + T - t) and the optimal gain is K*(t) = P(t).
// The temperature is 1/pi, which also makes the problem satisfy the
// structural conditions of the generative-sampling application exactly
// (B R^-1 B^T = sigma sigma^T and tr A = -(tau/4) log(|R|/(tau*pi)) = 0),
// so the same benchmark exercises the diffusion layer.
inline LQRModel make_scalar_benchmark(int N = 2000) {
  TimeGrid g(1.0, N);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
  return LQRModel(g, MatrixPath::constant(g, zero), MatrixPath::constant(g, one),
                  MatrixPath::constant(g, zero), MatrixPath::constant(g, one),
                  MatrixPath::constant(g, one), one, 1.0 / M_PI, 0.5,
                  InitialDistribution(Eigen::VectorXd::Zero(1), one));
}

// Planar rotation with a single control channel; no closed form, moderate
// coupling, nonzero state cost and start mean.
inline LQRModel make_lq2d_benchmark(int N = 2000) {
  TimeGrid g(1.0, N);
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 0.4, -0.4, 0.0;
  Eigen::MatrixXd B(2, 1);
  B << 0.0, 1.0;
  const Eigen::MatrixXd Q = 0.2 * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd sigma = 0.3 * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd Qprime = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd m0(2);
  m0 << 0.5, -0.3;
  const Eigen::MatrixXd S0 = 0.6 * Eigen::MatrixXd::Identity(2, 2);
  return LQRModel(g, MatrixPath::constant(g, A), MatrixPath::constant(g, B),
                  MatrixPath::constant(g, Q), MatrixPath::constant(g, R),
                  MatrixPath::constant(g, sigma), Qprime, 0.5, 0.5,
                  InitialDistribution(m0, S0));
}

}  // namespace ctlqr
