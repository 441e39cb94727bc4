#pragma once
// Uniform time grid on [0, T] and piecewise-linear matrix-valued paths.
//
// Every solver in the library shares one interpolation convention: paths are
// stored at the N+1 grid nodes and evaluated in between by linear
// interpolation. Evaluating exactly at node(j) returns values[j] bit-exactly.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ctlqr/errors.hpp"

namespace ctlqr {

class TimeGrid {
 public:
  TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw ShapeError("TimeGrid: horizon must be positive and finite");
    if (steps < 1) throw ShapeError("TimeGrid: need at least one step");
    dt_ = horizon_ / steps_;
  }

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  int nodes() const { return steps_ + 1; }
  double dt() const { return dt_; }

  // node(0) == 0 and node(steps) == horizon exactly.
  double node(int j) const { return j == steps_ ? horizon_ : j * dt_; }

  bool operator==(const TimeGrid& o) const {
    return horizon_ == o.horizon_ && steps_ == o.steps_;
  }
  bool operator!=(const TimeGrid& o) const { return !(*this == o); }

 private:
  double horizon_;
  int steps_;
  double dt_;
};

class MatrixPath {
 public:
  MatrixPath(TimeGrid grid, std::vector<Eigen::MatrixXd> values)
      : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.nodes())
      throw ShapeError("MatrixPath: expected " + std::to_string(grid_.nodes()) +
                       " node values, got " + std::to_string(values_.size()));
    if (values_.empty()) throw ShapeError("MatrixPath: empty value list");
    rows_ = values_[0].rows();
    cols_ = values_[0].cols();
    if (rows_ == 0 || cols_ == 0) throw ShapeError("MatrixPath: zero-sized matrices");
    for (const auto& v : values_)
      if (v.rows() != rows_ || v.cols() != cols_)
        throw ShapeError("MatrixPath: inconsistent matrix shapes across nodes");
  }

  static MatrixPath constant(const TimeGrid& grid, const Eigen::MatrixXd& value) {
    return MatrixPath(grid, std::vector<Eigen::MatrixXd>(grid.nodes(), value));
  }

  const TimeGrid& grid() const { return grid_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  const Eigen::MatrixXd& value(int j) const { return values_[j]; }
  Eigen::MatrixXd& value(int j) { return values_[j]; }
  const std::vector<Eigen::MatrixXd>& values() const { return values_; }

  // Piecewise-linear evaluation; t is clamped to [0, T]. Node hits are exact.
  Eigen::MatrixXd eval(double t) const {
    const int N = grid_.steps();
    if (t <= 0.0) return values_[0];
    if (t >= grid_.horizon()) return values_[N];
    int j = static_cast<int>(std::floor(t / grid_.dt()));
    if (j > N - 1) j = N - 1;
    // floor() can land one interval off after round-off; re-anchor on nodes.
    if (j + 1 <= N && t >= grid_.node(j + 1)) ++j;
    if (t < grid_.node(j)) --j;
    if (t == grid_.node(j)) return values_[j];
    if (t == grid_.node(j + 1)) return values_[j + 1];
    const double w = (t - grid_.node(j)) / (grid_.node(j + 1) - grid_.node(j));
    return (1.0 - w) * values_[j] + w * values_[j + 1];
  }

  double max_node_norm_inf() const {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
  }

 private:
  TimeGrid grid_;
  std::vector<Eigen::MatrixXd> values_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

}  // namespace ctlqr
