#pragma once
// Fixed-step classical Runge-Kutta integration aligned to a TimeGrid.
//
// Stages live at the 2N+1 half-step abscissae (nodes and interval midpoints),
// so right-hand sides receive a stage index, not a time. Coefficients that
// come from piecewise-linear paths are tabulated once per solve with
// stage_values(): node stages copy the node value, midpoint stages average the
// two adjacent nodes, which is exactly the linear interpolant there. Products
// of coefficients are formed after evaluation (evaluate then multiply).
//
// Backward equations are integrated by stepping with -h from the terminal
// node; this is the time-reversal substitution done once, here, instead of
// sign-flipping every right-hand side.

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"

namespace ctlqr {

// Coefficient values at stage s in [0, 2N]: even s is node s/2, odd s is the
// midpoint of interval (s-1)/2.
inline std::vector<Eigen::MatrixXd> stage_values(const MatrixPath& p) {
  const int N = p.grid().steps();
  std::vector<Eigen::MatrixXd> st(2 * N + 1);
  for (int j = 0; j <= N; ++j) st[2 * j] = p.value(j);
  for (int j = 0; j < N; ++j) st[2 * j + 1] = 0.5 * (p.value(j) + p.value(j + 1));
  return st;
}

// Integrates dy/dt = f(stage, y) forward from y(0) = initial; result[j] = y(t_j).
// f must be a pure function of (stage, state).
template <class State, class Rhs>
std::vector<State> rk4_forward(const TimeGrid& g, State initial, Rhs&& f) {
  const int N = g.steps();
  const double h = g.dt();
  std::vector<State> out;
  out.reserve(N + 1);
  State y = std::move(initial);
  out.push_back(y);
  for (int j = 0; j < N; ++j) {
    const State k1 = f(2 * j, y);
    const State y2 = y + (h / 2.0) * k1;
    const State k2 = f(2 * j + 1, y2);
    const State y3 = y + (h / 2.0) * k2;
    const State k3 = f(2 * j + 1, y3);
    const State y4 = y + h * k3;
    const State k4 = f(2 * j + 2, y4);
    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back(y);
  }
  return out;
}

// Integrates dy/dt = f(stage, y) backward from y(T) = terminal; result[j] = y(t_j).
template <class State, class Rhs>
std::vector<State> rk4_backward(const TimeGrid& g, State terminal, Rhs&& f) {
  const int N = g.steps();
  const double h = g.dt();
  std::vector<State> out(N + 1, terminal);
  State y = std::move(terminal);
  out[N] = y;
  for (int j = N; j > 0; --j) {
    const State k1 = f(2 * j, y);
    const State y2 = y - (h / 2.0) * k1;
    const State k2 = f(2 * j - 1, y2);
    const State y3 = y - (h / 2.0) * k2;
    const State k3 = f(2 * j - 1, y3);
    const State y4 = y - h * k3;
    const State k4 = f(2 * j - 2, y4);
    y = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out[j - 1] = y;
  }
  return out;
}

// Joint (matrix, scalar) state for value equations solved in one pass.
struct MatrixScalarState {
  Eigen::MatrixXd m;
  double s = 0.0;
};
inline MatrixScalarState operator+(const MatrixScalarState& a, const MatrixScalarState& b) {
  return {a.m + b.m, a.s + b.s};
}
inline MatrixScalarState operator-(const MatrixScalarState& a, const MatrixScalarState& b) {
  return {a.m - b.m, a.s - b.s};
}
inline MatrixScalarState operator*(double c, const MatrixScalarState& a) {
  return {c * a.m, c * a.s};
}

// Joint (vector, matrix) state for mean/covariance flows.
struct MeanCovState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
inline MeanCovState operator+(const MeanCovState& a, const MeanCovState& b) {
  return {a.mean + b.mean, a.cov + b.cov};
}
inline MeanCovState operator-(const MeanCovState& a, const MeanCovState& b) {
  return {a.mean - b.mean, a.cov - b.cov};
}
inline MeanCovState operator*(double c, const MeanCovState& a) {
  return {c * a.mean, c * a.cov};
}

// Trapezoid rule for an integrand sampled at the grid nodes.
inline double trapezoid(const TimeGrid& g, const std::vector<double>& nodeValues) {
  if (static_cast<int>(nodeValues.size()) != g.nodes())
    throw ShapeError("trapezoid: integrand not sampled at the grid nodes");
  const int N = g.steps();
  std::vector<double> terms(N + 1);
  terms[0] = 0.5 * nodeValues[0];
  for (int j = 1; j < N; ++j) terms[j] = nodeValues[j];
  terms[N] = 0.5 * nodeValues[N];
  double s = 0.0;
  // Fixed left-to-right order keeps results reproducible across platforms.
  for (double v : terms) s += v;
  return s * g.dt();
}

}  // namespace ctlqr
