#pragma once
// CSV writers/readers for paths, iteration traces, and experiment tables.
// Doubles are printed with %.17g so files round-trip bit-exactly and reruns
// are byte-identical.

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ctlqr/diffusion.hpp"
#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/ipo.hpp"
#include "ctlqr/transfer.hpp"

namespace ctlqr {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Columns: t, then row-major entries named <name>_<row>_<col>.
inline void write_path_csv(std::ostream& out, const std::string& name,
                           const MatrixPath& p) {
  out << "t";
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c)
      out << "," << name << "_" << r << "_" << c;
  out << "\n";
  for (int j = 0; j < p.grid().nodes(); ++j) {
    out << csv_num(p.grid().node(j));
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index c = 0; c < p.cols(); ++c) out << "," << csv_num(p.value(j)(r, c));
    out << "\n";
  }
}

inline void write_path_csv_file(const std::string& file, const std::string& name,
                                const MatrixPath& p) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot open '" + file + "' for writing");
  write_path_csv(out, name, p);
}

// Reads a path CSV produced by write_path_csv; the matrix shape must be
// supplied because the header only fixes the entry count.
inline MatrixPath read_path_csv(std::istream& in, int rows, int cols,
                                const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(name + ": empty path CSV");
  std::vector<double> ts;
  std::vector<Eigen::MatrixXd> vals;
  int lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> nums;
    while (std::getline(ss, cell, ',')) {
      try {
        nums.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(name + " line " + std::to_string(lineNo) + ": bad number '" +
                          cell + "'");
      }
    }
    if (static_cast<int>(nums.size()) != 1 + rows * cols)
      throw ConfigError(name + " line " + std::to_string(lineNo) + ": expected " +
                        std::to_string(1 + rows * cols) + " columns, got " +
                        std::to_string(nums.size()));
    ts.push_back(nums[0]);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = nums[1 + r * cols + c];
    vals.push_back(m);
  }
  if (ts.size() < 2) throw ConfigError(name + ": need at least two rows");
  const int N = static_cast<int>(ts.size()) - 1;
  const double T = ts.back();
  if (!(T > 0.0) || ts.front() != 0.0)
    throw ConfigError(name + ": time column must run from 0 to a positive horizon");
  TimeGrid g(T, N);
  for (int j = 0; j <= N; ++j)
    if (std::abs(ts[j] - g.node(j)) > 1e-9 * T)
      throw ConfigError(name + ": time column is not a uniform grid (row " +
                        std::to_string(j) + ")");
  return MatrixPath(g, std::move(vals));
}

inline MatrixPath read_path_csv_file(const std::string& file, int rows, int cols) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open path CSV '" + file + "'");
  return read_path_csv(in, rows, cols, file);
}

// Columns: iter, cost, gap, l2dist, linearRatio (nan for the first row).
inline void write_trace_csv(std::ostream& out, const IPOTrace& trace) {
  out << "iter,cost,gap,l2dist,linearRatio\n";
  for (std::size_t i = 0; i < trace.costs.size(); ++i) {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    if (i > 0 && trace.gaps[i - 1] != 0.0) ratio = trace.gaps[i] / trace.gaps[i - 1];
    out << i << "," << csv_num(trace.costs[i]) << "," << csv_num(trace.gaps[i]) << ","
        << csv_num(trace.l2dists[i]) << "," << csv_num(ratio) << "\n";
  }
}

inline void write_trace_csv_file(const std::string& file, const IPOTrace& trace) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot open '" + file + "' for writing");
  write_trace_csv(out, trace);
}

// Columns: rho, seed, perturbSize, warmIters, coldIters, warmExponent,
// coldExponent. Infeasible replicates keep their rho/seed and carry nan/-1.
inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "rho,seed,perturbSize,warmIters,coldIters,warmExponent,coldExponent\n";
  for (const SweepRow& r : rows) {
    out << csv_num(r.rho) << "," << r.seed << "," << csv_num(r.perturbSize) << ","
        << r.warmIters << "," << r.coldIters << "," << csv_num(r.warmExponent) << ","
        << csv_num(r.coldExponent) << "\n";
  }
}

inline void write_sweep_csv_file(const std::string& file, const std::vector<SweepRow>& rows) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot open '" + file + "' for writing");
  write_sweep_csv(out, rows);
}

// Columns: mNorm, noiseW2, terminalW2, terminalTVBound, gridN, seed.
inline void write_diffusion_csv(std::ostream& out,
                                const std::vector<ErrorBoundRecord>& recs) {
  out << "mNorm,noiseW2,terminalW2,terminalTVBound,gridN,seed\n";
  for (const ErrorBoundRecord& r : recs) {
    out << csv_num(r.mNorm) << "," << csv_num(r.noiseW2) << "," << csv_num(r.terminalW2)
        << "," << csv_num(r.terminalTVBound) << "," << r.gridN << "," << r.seed << "\n";
  }
}

inline void write_diffusion_csv_file(const std::string& file,
                                     const std::vector<ErrorBoundRecord>& recs) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot open '" + file + "' for writing");
  write_diffusion_csv(out, recs);
}

}  // namespace ctlqr
