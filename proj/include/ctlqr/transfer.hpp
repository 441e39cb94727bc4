#pragma once
// Policy transfer between nearby problems: perturb the problem data, then
// compare restarting the iteration from the source optimum (warm) against
// restarting from zero (cold).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/ipo.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/policy.hpp"
#include "ctlqr/rng.hpp"

namespace ctlqr {

enum class PerturbTarget { A, Q, B, R, Qprime };

inline std::string to_string(PerturbTarget t) {
  switch (t) {
    case PerturbTarget::A: return "A";
    case PerturbTarget::Q: return "Q";
    case PerturbTarget::B: return "B";
    case PerturbTarget::R: return "R";
    case PerturbTarget::Qprime: return "Qprime";
  }
  return "?";
}

inline std::vector<PerturbTarget> all_perturb_targets() {
  return {PerturbTarget::A, PerturbTarget::Q, PerturbTarget::B, PerturbTarget::R,
          PerturbTarget::Qprime};
}

struct PerturbationSpec {
  double rho = 0.0;
  std::vector<PerturbTarget> targets = all_perturb_targets();
  std::uint64_t seed = 0;
  // Optional fixed directions (normalized internally); absent targets get a
  // seeded Gaussian direction from stream 100 + slot index.
  std::map<PerturbTarget, Eigen::MatrixXd> fixedDirections;
};

namespace detail {

inline Eigen::MatrixXd perturb_direction(const PerturbationSpec& spec, PerturbTarget t,
                                         int rows, int cols, bool symmetric) {
  Eigen::MatrixXd D;
  auto it = spec.fixedDirections.find(t);
  if (it != spec.fixedDirections.end()) {
    D = it->second;
    if (D.rows() != rows || D.cols() != cols)
      throw ShapeError("perturb_model: fixed direction for " + to_string(t) +
                       " has wrong shape");
  } else {
    RandomStream rs(spec.seed, 100 + static_cast<std::uint64_t>(t));
    D = rs.normal_matrix(0, rows, cols);
  }
  if (symmetric) D = symmetrize(D);
  const double nrm = spectral_norm(D);
  if (!(nrm > 0.0))
    throw PerturbationError("perturb_model: zero direction for " + to_string(t));
  return D / nrm;
}

inline double sup_node_spectral_norm(const MatrixPath& p) {
  double m = 0.0;
  for (int j = 0; j < p.grid().nodes(); ++j) m = std::max(m, spectral_norm(p.value(j)));
  return m;
}

inline MatrixPath shift_path(const MatrixPath& p, const Eigen::MatrixXd& step) {
  std::vector<Eigen::MatrixXd> vals(p.grid().nodes());
  for (int j = 0; j < p.grid().nodes(); ++j) vals[j] = p.value(j) + step;
  return MatrixPath(p.grid(), std::move(vals));
}

inline MatrixPath psd_project_path(const MatrixPath& p) {
  std::vector<Eigen::MatrixXd> vals(p.grid().nodes());
  for (int j = 0; j < p.grid().nodes(); ++j) vals[j] = psd_project(p.value(j));
  return MatrixPath(p.grid(), std::move(vals));
}

}  // namespace detail

// Adds rho * (sup-node spectral norm of the slot) times a unit-norm direction
// to each requested slot, constant in time. Symmetric slots use symmetrized
// directions and are PSD-projected afterwards, so the result stays inside the
// admissible class; if the projected R falls below the delta floor the
// perturbation is infeasible. rho = 0 returns the model unchanged.
inline LQRModel perturb_model(const LQRModel& m, const PerturbationSpec& spec) {
  if (spec.rho < 0.0) throw ValidationError("perturb_model: rho must be nonnegative");
  if (spec.rho == 0.0) return m;

  MatrixPath A = m.A(), B = m.B(), Q = m.Q(), R = m.R();
  Eigen::MatrixXd Qp = m.Qprime();
  const int n = m.n(), k = m.k();

  for (PerturbTarget t : spec.targets) {
    switch (t) {
      case PerturbTarget::A: {
        const Eigen::MatrixXd D = detail::perturb_direction(spec, t, n, n, false);
        A = detail::shift_path(A, spec.rho * detail::sup_node_spectral_norm(m.A()) * D);
        break;
      }
      case PerturbTarget::B: {
        const Eigen::MatrixXd D = detail::perturb_direction(spec, t, n, k, false);
        B = detail::shift_path(B, spec.rho * detail::sup_node_spectral_norm(m.B()) * D);
        break;
      }
      case PerturbTarget::Q: {
        const Eigen::MatrixXd D = detail::perturb_direction(spec, t, n, n, true);
        Q = detail::psd_project_path(
            detail::shift_path(Q, spec.rho * detail::sup_node_spectral_norm(m.Q()) * D));
        break;
      }
      case PerturbTarget::R: {
        const Eigen::MatrixXd D = detail::perturb_direction(spec, t, k, k, true);
        R = detail::psd_project_path(
            detail::shift_path(R, spec.rho * detail::sup_node_spectral_norm(m.R()) * D));
        for (int j = 0; j < R.grid().nodes(); ++j) {
          const double lam =
              min_eigenvalue_sym(R.value(j) - m.deltaFloor() * Eigen::MatrixXd::Identity(k, k));
          if (lam < -1e-12)
            throw PerturbationError(
                "perturb_model: perturbed R falls below the delta floor at node " +
                std::to_string(j) + " (margin " + std::to_string(lam) + ")");
        }
        break;
      }
      case PerturbTarget::Qprime: {
        const Eigen::MatrixXd D = detail::perturb_direction(spec, t, n, n, true);
        Qp = psd_project(Qp + spec.rho * spectral_norm(m.Qprime()) * D);
        break;
      }
    }
  }
  return LQRModel(m.grid(), std::move(A), std::move(B), std::move(Q), std::move(R),
                  m.sigma(), std::move(Qp), m.tau(), m.deltaFloor(), m.init());
}

struct TransferReport {
  double rho = 0.0;
  std::uint64_t seed = 0;
  double perturbSize = 0.0;  // parameter distance actually achieved
  IPOTrace warmTrace;
  IPOTrace coldTrace;
  int warmIters = 0;
  int coldIters = 0;
  double warmExponent = std::numeric_limits<double>::quiet_NaN();
  double coldExponent = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {
inline double exponent_or_nan(const IPOTrace& t) {
  try {
    return rate_diagnostics(t).superlinearExponent;
  } catch (const DiagnosticWindowError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}
}  // namespace detail

// Perturbs the source model, then solves the perturbed problem twice: warm
// started from the source's optimal gain and cold started from zero.
inline TransferReport transfer_experiment(const LQRModel& source,
                                          const PerturbationSpec& spec, double tol,
                                          int maxIter) {
  const LQRModel target = perturb_model(source, spec);
  TransferReport rep;
  rep.rho = spec.rho;
  rep.seed = spec.seed;
  rep.perturbSize = model_parameter_distance(source, target);

  const MatrixPath warmK0 = optimal_policy(source).K();
  const MatrixPath coldK0 =
      MatrixPath::constant(source.grid(), Eigen::MatrixXd::Zero(source.k(), source.n()));

  rep.warmTrace = run_ipo(target, warmK0, tol, maxIter);
  rep.coldTrace = run_ipo(target, coldK0, tol, maxIter);
  rep.warmIters = rep.warmTrace.iterations();
  rep.coldIters = rep.coldTrace.iterations();
  rep.warmExponent = detail::exponent_or_nan(rep.warmTrace);
  rep.coldExponent = detail::exponent_or_nan(rep.coldTrace);
  return rep;
}

struct SweepRow {
  double rho = 0.0;
  std::uint64_t seed = 0;
  bool feasible = true;
  double perturbSize = std::numeric_limits<double>::quiet_NaN();
  int warmIters = -1;
  int coldIters = -1;
  double warmExponent = std::numeric_limits<double>::quiet_NaN();
  double coldExponent = std::numeric_limits<double>::quiet_NaN();
};

struct SweepStat {
  double rho = 0.0;
  int replicates = 0;
  int feasibleCount = 0;
  // Means/maxima over feasible replicates; NaN (or -1 for maxima) when none.
  double meanWarmIters = std::numeric_limits<double>::quiet_NaN();
  double meanColdIters = std::numeric_limits<double>::quiet_NaN();
  int maxWarmIters = -1;
  int maxColdIters = -1;
  double meanPerturbSize = std::numeric_limits<double>::quiet_NaN();
  // Fraction of feasible replicates with a measurable warm exponent >= 1.3.
  double warmSuperlinearFraction = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  std::vector<SweepRow> rows;    // one per (rho, replicate)
  std::vector<SweepStat> stats;  // one per rho
};

// Replicated transfer experiments across perturbation sizes. Replicate r of
// any rho uses child seed derive_seed(seed, r), so the perturbation direction
// is shared across rhos and varies across replicates.
inline SweepResult epsilon_sweep(const LQRModel& source, const std::vector<double>& rhos,
                                 int replicates, std::uint64_t seed, double tol,
                                 int maxIter,
                                 const std::vector<PerturbTarget>& targets =
                                     all_perturb_targets()) {
  if (replicates < 1) throw ValidationError("epsilon_sweep: need at least one replicate");
  SweepResult out;
  for (double rho : rhos) {
    SweepStat stat;
    stat.rho = rho;
    stat.replicates = replicates;
    double sumWarm = 0.0, sumCold = 0.0, sumSize = 0.0;
    int expCount = 0, expSuperlinear = 0;
    for (int r = 0; r < replicates; ++r) {
      SweepRow row;
      row.rho = rho;
      row.seed = derive_seed(seed, static_cast<std::uint64_t>(r));
      PerturbationSpec spec;
      spec.rho = rho;
      spec.seed = row.seed;
      spec.targets = targets;
      try {
        const TransferReport rep = transfer_experiment(source, spec, tol, maxIter);
        row.perturbSize = rep.perturbSize;
        row.warmIters = rep.warmIters;
        row.coldIters = rep.coldIters;
        row.warmExponent = rep.warmExponent;
        row.coldExponent = rep.coldExponent;
        ++stat.feasibleCount;
        sumWarm += rep.warmIters;
        sumCold += rep.coldIters;
        sumSize += rep.perturbSize;
        stat.maxWarmIters = std::max(stat.maxWarmIters, rep.warmIters);
        stat.maxColdIters = std::max(stat.maxColdIters, rep.coldIters);
        if (std::isfinite(rep.warmExponent)) {
          ++expCount;
          if (rep.warmExponent >= 1.3) ++expSuperlinear;
        }
      } catch (const PerturbationError&) {
        row.feasible = false;
      }
      out.rows.push_back(row);
    }
    if (stat.feasibleCount > 0) {
      stat.meanWarmIters = sumWarm / stat.feasibleCount;
      stat.meanColdIters = sumCold / stat.feasibleCount;
      stat.meanPerturbSize = sumSize / stat.feasibleCount;
    }
    if (expCount > 0)
      stat.warmSuperlinearFraction = static_cast<double>(expSuperlinear) / expCount;
    out.stats.push_back(stat);
  }
  return out;
}

}  // namespace ctlqr
