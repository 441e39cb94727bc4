#pragma once
// Plain-text model configs.
//
// Line format: `key = values`, `#` starts a comment, blank lines are ignored.
// Scalars: n, k, d, N, T, tau, delta, delta1. Matrix slots (A, B, Q, R,
// sigma, Qprime, init.mean, init.cov) take whitespace- or comma-separated
// entries in row-major order; their shapes come from n, k, d. Time-varying
// slots may instead be given per node as `A[j] = ...` for every j in 0..N.
// Unknown keys are rejected.

#include <Eigen/Dense>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/model.hpp"

namespace ctlqr {

struct ParsedConfig {
  LQRModel model;
  double delta1 = 1e-8;  // covariance floor handed to policies built by the CLI
};

namespace detail {

struct RawConfig {
  std::map<std::string, std::vector<double>> scalarsAndMatrices;
  std::map<std::string, std::map<int, std::vector<double>>> perNode;
};

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<double> parse_numbers(const std::string& text, int line,
                                         const std::string& key) {
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',') c = ' ';
  std::vector<double> out;
  std::istringstream iss(cleaned);
  std::string tok;
  while (iss >> tok) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                        "': '" + tok + "' is not a number");
    }
    if (pos != tok.size())
      throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                        "': '" + tok + "' is not a number");
    out.push_back(v);
  }
  if (out.empty())
    throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                      "' has no values");
  return out;
}

inline RawConfig parse_raw(std::istream& in, const std::string& name) {
  RawConfig raw;
  std::string lineText;
  int line = 0;
  while (std::getline(in, lineText)) {
    ++line;
    const std::size_t hash = lineText.find('#');
    if (hash != std::string::npos) lineText.erase(hash);
    lineText = trim(lineText);
    if (lineText.empty()) continue;
    const std::size_t eq = lineText.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + " line " + std::to_string(line) + ": expected 'key = values'");
    std::string key = trim(lineText.substr(0, eq));
    const std::string value = trim(lineText.substr(eq + 1));
    if (key.empty())
      throw ConfigError(name + " line " + std::to_string(line) + ": empty key");

    const std::size_t bracket = key.find('[');
    if (bracket != std::string::npos) {
      if (key.back() != ']')
        throw ConfigError(name + " line " + std::to_string(line) + ": malformed key '" +
                          key + "'");
      const std::string base = trim(key.substr(0, bracket));
      const std::string idxText = key.substr(bracket + 1, key.size() - bracket - 2);
      int idx = -1;
      try {
        idx = std::stoi(idxText);
      } catch (const std::exception&) {
        throw ConfigError(name + " line " + std::to_string(line) +
                          ": bad node index in '" + key + "'");
      }
      if (idx < 0)
        throw ConfigError(name + " line " + std::to_string(line) +
                          ": negative node index in '" + key + "'");
      raw.perNode[base][idx] = parse_numbers(value, line, key);
    } else {
      if (raw.scalarsAndMatrices.count(key))
        throw ConfigError(name + " line " + std::to_string(line) + ": duplicate key '" +
                          key + "'");
      raw.scalarsAndMatrices[key] = parse_numbers(value, line, key);
    }
  }
  return raw;
}

inline double take_scalar(RawConfig& raw, const std::string& key) {
  auto it = raw.scalarsAndMatrices.find(key);
  if (it == raw.scalarsAndMatrices.end())
    throw ConfigError("config: missing required key '" + key + "'");
  if (it->second.size() != 1)
    throw ConfigError("config: key '" + key + "' must be a single number");
  const double v = it->second[0];
  raw.scalarsAndMatrices.erase(it);
  return v;
}

inline int take_int(RawConfig& raw, const std::string& key) {
  const double v = take_scalar(raw, key);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("config: key '" + key + "' must be an integer");
  return i;
}

inline Eigen::MatrixXd shape_entries(const std::vector<double>& entries, int rows, int cols,
                                     const std::string& key) {
  if (static_cast<int>(entries.size()) != rows * cols)
    throw ConfigError("config: key '" + key + "' needs " + std::to_string(rows * cols) +
                      " entries (" + std::to_string(rows) + "x" + std::to_string(cols) +
                      " row-major), got " + std::to_string(entries.size()));
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = entries[r * cols + c];
  return m;
}

inline MatrixPath take_path(RawConfig& raw, const std::string& key, const TimeGrid& g,
                            int rows, int cols) {
  const auto constIt = raw.scalarsAndMatrices.find(key);
  const auto nodeIt = raw.perNode.find(key);
  if (constIt != raw.scalarsAndMatrices.end() && nodeIt != raw.perNode.end())
    throw ConfigError("config: key '" + key + "' given both constant and per-node");
  if (constIt != raw.scalarsAndMatrices.end()) {
    MatrixPath p = MatrixPath::constant(g, shape_entries(constIt->second, rows, cols, key));
    raw.scalarsAndMatrices.erase(constIt);
    return p;
  }
  if (nodeIt != raw.perNode.end()) {
    std::vector<Eigen::MatrixXd> vals(g.nodes());
    for (int j = 0; j < g.nodes(); ++j) {
      auto v = nodeIt->second.find(j);
      if (v == nodeIt->second.end())
        throw ConfigError("config: per-node key '" + key + "' missing node " +
                          std::to_string(j));
      vals[j] = shape_entries(v->second, rows, cols, key + "[" + std::to_string(j) + "]");
    }
    if (static_cast<int>(nodeIt->second.size()) != g.nodes())
      throw ConfigError("config: per-node key '" + key + "' has extra node entries");
    raw.perNode.erase(nodeIt);
    return MatrixPath(g, std::move(vals));
  }
  throw ConfigError("config: missing required key '" + key + "'");
}

inline Eigen::MatrixXd take_matrix(RawConfig& raw, const std::string& key, int rows,
                                   int cols) {
  auto it = raw.scalarsAndMatrices.find(key);
  if (it == raw.scalarsAndMatrices.end())
    throw ConfigError("config: missing required key '" + key + "'");
  Eigen::MatrixXd m = shape_entries(it->second, rows, cols, key);
  raw.scalarsAndMatrices.erase(it);
  return m;
}

}  // namespace detail

inline ParsedConfig parse_config(std::istream& in, const std::string& name) {
  detail::RawConfig raw = detail::parse_raw(in, name);

  const int n = detail::take_int(raw, "n");
  const int k = detail::take_int(raw, "k");
  const int d = detail::take_int(raw, "d");
  if (n < 1 || k < 1 || d < 1)
    throw ConfigError("config: n, k, d must be at least 1");
  const double T = detail::take_scalar(raw, "T");
  const int N = detail::take_int(raw, "N");
  if (!(T > 0.0)) throw ConfigError("config: T must be positive");
  if (N < 1) throw ConfigError("config: N must be at least 1");
  const double tau = detail::take_scalar(raw, "tau");
  const double delta = detail::take_scalar(raw, "delta");
  double delta1 = 1e-8;
  if (raw.scalarsAndMatrices.count("delta1")) delta1 = detail::take_scalar(raw, "delta1");
  if (!(delta > 0.0)) throw ConfigError("config: delta must be positive");
  if (!(delta1 > 0.0)) throw ConfigError("config: delta1 must be positive");

  const TimeGrid g(T, N);
  MatrixPath A = detail::take_path(raw, "A", g, n, n);
  MatrixPath B = detail::take_path(raw, "B", g, n, k);
  MatrixPath Q = detail::take_path(raw, "Q", g, n, n);
  MatrixPath R = detail::take_path(raw, "R", g, k, k);
  MatrixPath sigma = detail::take_path(raw, "sigma", g, n, d);
  Eigen::MatrixXd Qprime = detail::take_matrix(raw, "Qprime", n, n);
  Eigen::MatrixXd mean = detail::take_matrix(raw, "init.mean", n, 1);
  Eigen::MatrixXd cov = detail::take_matrix(raw, "init.cov", n, n);

  if (!raw.scalarsAndMatrices.empty())
    throw ConfigError("config: unknown key '" + raw.scalarsAndMatrices.begin()->first + "'");
  if (!raw.perNode.empty())
    throw ConfigError("config: unknown per-node key '" + raw.perNode.begin()->first + "'");

  LQRModel model(g, std::move(A), std::move(B), std::move(Q), std::move(R),
                 std::move(sigma), std::move(Qprime), tau, delta,
                 InitialDistribution(mean.col(0), cov));
  return {std::move(model), delta1};
}

inline ParsedConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(f, path);
}

inline ParsedConfig parse_config_text(const std::string& text, const std::string& name) {
  std::istringstream iss(text);
  return parse_config(iss, name);
}

}  // namespace ctlqr
