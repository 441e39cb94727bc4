#pragma once
// Exception hierarchy. The CLI maps these onto process exit codes:
// ConfigError -> 2, ValidationError -> 3, NumericalError -> 4.

#include <stdexcept>
#include <string>

namespace ctlqr {

// Malformed input that never reached a model: bad config file, bad flag value.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally impossible data: dimension mismatches, paths on different grids.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Well-formed data that violates a model assumption (definiteness, floors).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A requested perturbation cannot keep the model inside the feasible class.
class PerturbationError : public ValidationError {
 public:
  explicit PerturbationError(const std::string& what) : ValidationError(what) {}
};

// Failure while computing: singular matrix, divergent integration, overflow.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Convergence-rate diagnostics need several resolvable gaps; thrown when the
// trace has too few (e.g. the run started at the fixed point).
class DiagnosticWindowError : public NumericalError {
 public:
  explicit DiagnosticWindowError(const std::string& what) : NumericalError(what) {}
};

}  // namespace ctlqr
