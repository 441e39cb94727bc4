#pragma once
// Score-based generative sampling driven by the LQR value path.
//
// Under the structural conditions checked by check_structural_conditions
//   (i)  B_t R_t^-1 B_t^T = sigma_t sigma_t^T
//   (ii) tr A_t = -(tau/4) log(|R_t| / (tau*pi)^k)
//   (iii) Q = 0, Q' > 0
// the optimal value path P_t with terminal weight M induces Gaussian marginals
// p(t, .) = N(0, P_{T-t}^-1) for the noising process, whose score is linear:
// grad log p(t, x) = -P_{T-t} x. The generative (reverse-time) process then
// has linear drift F_s = A_s - sigma_s sigma_s^T P_s and diffusion sigma_s,
// runs from the noise law N(0, P_0^-1) at s = 0 and ends at the data law
// N(0, M^-1) at s = T. Means and covariances of both processes close in
// ordinary linear ODEs, which is what this header integrates.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/integrate.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/riccati.hpp"
#include "ctlqr/rng.hpp"

namespace ctlqr {

struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  GaussianState(Eigen::VectorXd m, const Eigen::MatrixXd& c) : mean(std::move(m)) {
    if (c.rows() != c.cols() || c.rows() != mean.size())
      throw ShapeError("GaussianState: mean/cov dimension mismatch");
    if (min_eigenvalue_sym(c) < -1e-12)
      throw ValidationError("GaussianState: covariance has a negative eigenvalue");
    cov = symmetrize(c);
  }
};

struct StructuralConditionsReport {
  std::vector<double> noiseResiduals;  // ||B R^-1 B^T - sigma sigma^T||_2 per node
  std::vector<double> traceResiduals;  // |tr A + (tau/4) log(|R|/(tau*pi)^k)| per node
  double maxNoiseResidual = 0.0;
  double maxTraceResidual = 0.0;
  double maxQNorm = 0.0;
  bool qIsZero = false;
  bool qprimePositiveDefinite = false;

  bool passes() const {
    return maxNoiseResidual <= 1e-10 && maxTraceResidual <= 1e-10 && qIsZero &&
           qprimePositiveDefinite;
  }
  // First violated condition, for error messages; empty when passes().
  std::string violation() const {
    if (maxNoiseResidual > 1e-10)
      return "B R^-1 B^T = sigma sigma^T (max residual " +
             std::to_string(maxNoiseResidual) + ")";
    if (maxTraceResidual > 1e-10)
      return "tr A = -(tau/4) log(|R|/(tau*pi)^k) (max residual " +
             std::to_string(maxTraceResidual) + ")";
    if (!qIsZero) return "Q = 0 (max node norm " + std::to_string(maxQNorm) + ")";
    if (!qprimePositiveDefinite) return "Qprime positive definite";
    return "";
  }
};

inline StructuralConditionsReport check_structural_conditions(const LQRModel& m) {
  StructuralConditionsReport rep;
  const int N = m.grid().steps();
  rep.noiseResiduals.resize(N + 1);
  rep.traceResiduals.resize(N + 1);
  const double logTauPi = std::log(m.tau() * M_PI);
  for (int j = 0; j <= N; ++j) {
    const Eigen::MatrixXd& B = m.B().value(j);
    const Eigen::MatrixXd& R = m.R().value(j);
    const Eigen::MatrixXd& sg = m.sigma().value(j);
    const Eigen::MatrixXd Rinv = spd_inverse(R, "R at node " + std::to_string(j));
    rep.noiseResiduals[j] = spectral_norm(B * Rinv * B.transpose() - sg * sg.transpose());
    const double logDetR = log_det_spd(R, "R at node " + std::to_string(j));
    rep.traceResiduals[j] = std::abs(m.A().value(j).trace() +
                                     0.25 * m.tau() * (logDetR - m.k() * logTauPi));
    rep.maxNoiseResidual = std::max(rep.maxNoiseResidual, rep.noiseResiduals[j]);
    rep.maxTraceResidual = std::max(rep.maxTraceResidual, rep.traceResiduals[j]);
    rep.maxQNorm = std::max(rep.maxQNorm, spectral_norm(m.Q().value(j)));
  }
  rep.qIsZero = rep.maxQNorm <= 1e-10;
  rep.qprimePositiveDefinite = min_eigenvalue_sym(m.Qprime()) > 1e-12;
  return rep;
}

// Value path with terminal weight M, packaged for score evaluation.
struct ScoreSpec {
  Eigen::MatrixXd M;
  MatrixPath P;  // optimal value path of the model with Qprime replaced by M
};

inline ScoreSpec make_score_spec(const LQRModel& m, const Eigen::MatrixXd& M) {
  const StructuralConditionsReport rep = check_structural_conditions(m);
  if (!rep.passes())
    throw ValidationError("make_score_spec: structural condition violated: " +
                          rep.violation());
  if (M.rows() != m.n() || M.cols() != m.n())
    throw ShapeError("make_score_spec: M must be n x n");
  if (min_eigenvalue_sym(M) <= 1e-12)
    throw ValidationError("make_score_spec: M must be positive definite");
  ValueSolution sol = solve_optimal_riccati(m.with_Qprime(M));
  return {symmetrize(M), std::move(sol.P)};
}

namespace detail {
inline Eigen::MatrixXd invert_value_matrix(const Eigen::MatrixXd& P) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(P));
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > hi * 1e-14) || !(hi > 0.0))
    throw NumericalError("density is degenerate: value matrix numerically singular");
  Eigen::VectorXd inv = es.eigenvalues().cwiseInverse();
  return symmetrize(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}
}  // namespace detail

// Marginal of the noising process at diffusion time t: N(0, (P^M_{T-t})^-1).
inline GaussianState density_params(const ScoreSpec& spec, double t) {
  const TimeGrid& g = spec.P.grid();
  const Eigen::MatrixXd Pval = spec.P.eval(g.horizon() - t);
  return GaussianState(Eigen::VectorXd::Zero(Pval.rows()),
                       detail::invert_value_matrix(Pval));
}

inline GaussianState density_params(const LQRModel& m, const Eigen::MatrixXd& M, double t) {
  return density_params(make_score_spec(m, M), t);
}

// Score of the noising marginal: grad log p(t, x) = -P^M_{T-t} x.
inline Eigen::VectorXd score(const ScoreSpec& spec, double t, const Eigen::VectorXd& x) {
  if (x.size() != spec.P.rows()) throw ShapeError("score: x has wrong dimension");
  const TimeGrid& g = spec.P.grid();
  return -(spec.P.eval(g.horizon() - t) * x);
}

// Covariance of the noising process started from cov(0) = startCov:
//   dS/dt = -A_{T-t} S - S A_{T-t}^T + sigma_{T-t} sigma_{T-t}^T.
inline MatrixPath forward_moments(const LQRModel& m, const Eigen::MatrixXd& startCov) {
  if (startCov.rows() != m.n() || startCov.cols() != m.n())
    throw ShapeError("forward_moments: startCov must be n x n");
  if (min_eigenvalue_sym(startCov) < -1e-12)
    throw ValidationError("forward_moments: startCov has a negative eigenvalue");
  const auto A = stage_values(m.A());
  const auto sg = stage_values(m.sigma());
  const int twoN = 2 * m.grid().steps();
  std::vector<Eigen::MatrixXd> W(sg.size());
  for (std::size_t s = 0; s < sg.size(); ++s) W[s] = sg[s] * sg[s].transpose();
  auto rhs = [&](int s, const Eigen::MatrixXd& S) -> Eigen::MatrixXd {
    const Eigen::MatrixXd& Ar = A[twoN - s];  // coefficient at original time T - t
    return -Ar * S - S * Ar.transpose() + W[twoN - s];
  };
  std::vector<Eigen::MatrixXd> path = rk4_forward(m.grid(), symmetrize(startCov), rhs);
  detail::ensure_finite(path, "noising covariance equation");
  return MatrixPath(m.grid(), std::move(path));
}

struct BackwardMoments {
  MatrixPath mean;  // n x 1
  MatrixPath cov;   // n x n
};

// Mean/covariance of the generative reverse process from init at s = 0:
//   dm/ds = F_s m,   dS/ds = F_s S + S F_s^T + sigma_s sigma_s^T,
// with F_s = A_s - sigma_s sigma_s^T P^M_s.
inline BackwardMoments backward_moments(const LQRModel& m, const ScoreSpec& spec,
                                        const GaussianState& init) {
  if (init.mean.size() != m.n())
    throw ShapeError("backward_moments: init dimension mismatch");
  if (spec.P.grid() != m.grid())
    throw ShapeError("backward_moments: score spec grid differs from model grid");
  const auto A = stage_values(m.A());
  const auto sg = stage_values(m.sigma());
  const auto P = stage_values(spec.P);
  std::vector<Eigen::MatrixXd> F(A.size()), W(A.size());
  for (std::size_t s = 0; s < A.size(); ++s) {
    W[s] = sg[s] * sg[s].transpose();
    F[s] = A[s] - W[s] * P[s];
  }
  auto rhs = [&](int s, const MeanCovState& y) -> MeanCovState {
    return {F[s] * y.mean, F[s] * y.cov + y.cov * F[s].transpose() + W[s]};
  };
  MeanCovState start{init.mean, init.cov};
  std::vector<MeanCovState> path = rk4_forward(m.grid(), start, rhs);
  std::vector<Eigen::MatrixXd> means(path.size()), covs(path.size());
  for (std::size_t j = 0; j < path.size(); ++j) {
    if (!path[j].mean.allFinite() || !path[j].cov.allFinite())
      throw NumericalError("reverse-process moments diverged at node " + std::to_string(j));
    means[j] = path[j].mean;
    covs[j] = path[j].cov;
  }
  return {MatrixPath(m.grid(), std::move(means)), MatrixPath(m.grid(), std::move(covs))};
}

// Euler-Maruyama paths of the generative reverse process; returns the n x paths
// matrix of terminal states. Path p draws from stream 1000 + p: indices
// 0..n-1 seed the initial state, then n + j*d + c is step j, noise channel c.
inline Eigen::MatrixXd sample_backward(const LQRModel& m, const ScoreSpec& spec,
                                       const GaussianState& init, int paths,
                                       std::uint64_t seed) {
  if (paths < 1) throw ValidationError("sample_backward: need at least one path");
  if (init.mean.size() != m.n())
    throw ShapeError("sample_backward: init dimension mismatch");
  const int N = m.grid().steps();
  const int n = m.n(), d = m.d();
  const double h = m.grid().dt();
  const double sqrth = std::sqrt(h);

  std::vector<Eigen::MatrixXd> F(N), S(N);
  for (int j = 0; j < N; ++j) {
    const Eigen::MatrixXd W = m.sigma().value(j) * m.sigma().value(j).transpose();
    F[j] = Eigen::MatrixXd::Identity(n, n) + h * (m.A().value(j) - W * spec.P.value(j));
    S[j] = sqrth * m.sigma().value(j);
  }
  const Eigen::MatrixXd L0 = sqrt_psd(init.cov);

  Eigen::MatrixXd out(n, paths);
  for (int p = 0; p < paths; ++p) {
    RandomStream rs(seed, 1000 + static_cast<std::uint64_t>(p));
    Eigen::VectorXd y = init.mean + L0 * rs.normal_vector(0, n);
    std::uint64_t idx = n;
    for (int j = 0; j < N; ++j) {
      y = F[j] * y + S[j] * rs.normal_vector(idx, d);
      idx += d;
    }
    if (!y.allFinite())
      throw NumericalError("sample_backward: path " + std::to_string(p) + " diverged");
    out.col(p) = y;
  }
  return out;
}

// 2-Wasserstein distance between Gaussians:
//   W2^2 = ||ma - mb||^2 + tr(Sa + Sb - 2 (Sb^1/2 Sa Sb^1/2)^1/2).
inline double w2_gaussians(const GaussianState& a, const GaussianState& b) {
  if (a.mean.size() != b.mean.size())
    throw ShapeError("w2_gaussians: dimension mismatch");
  const Eigen::MatrixXd rootB = sqrt_psd(b.cov);
  const Eigen::MatrixXd cross = sqrt_psd(rootB * a.cov * rootB);
  const double sq = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() -
                    2.0 * cross.trace();
  return std::sqrt(std::max(sq, 0.0));
}

struct TVResult {
  double klDivergence = 0.0;       // KL(a || b)
  double pinskerUpperBound = 0.0;  // sqrt(KL/2) >= TV(a, b)
  std::optional<double> exact1D;   // numeric TV, univariate case only
};

namespace detail {
inline double adaptive_simpson(const std::function<double(double)>& f, double lo,
                               double hi, double flo, double fmid, double fhi,
                               double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double lmid = 0.5 * (lo + mid);
  const double rmid = 0.5 * (mid + hi);
  const double flmid = f(lmid);
  const double frmid = f(rmid);
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  const double left = (mid - lo) / 6.0 * (flo + 4.0 * flmid + fmid);
  const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frmid + fhi);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, lo, mid, flo, flmid, fmid, tol / 2.0, depth - 1) +
         adaptive_simpson(f, mid, hi, fmid, frmid, fhi, tol / 2.0, depth - 1);
}
}  // namespace detail

// Total variation diagnostics: Pinsker bound always, exact numeric value in
// one dimension (adaptive Simpson on |pa - pb|/2, absolute tolerance 1e-10).
inline TVResult tv_gaussians(const GaussianState& a, const GaussianState& b) {
  if (a.mean.size() != b.mean.size())
    throw ShapeError("tv_gaussians: dimension mismatch");
  const int n = static_cast<int>(a.mean.size());
  const Eigen::MatrixXd SbInv = spd_inverse(b.cov, "tv_gaussians: second covariance");
  const double logDetB = log_det_spd(b.cov, "tv_gaussians: second covariance");
  const double logDetA = log_det_spd(a.cov, "tv_gaussians: first covariance");
  const Eigen::VectorXd dm = b.mean - a.mean;
  TVResult out;
  out.klDivergence = 0.5 * ((SbInv.cwiseProduct(a.cov)).sum() + dm.dot(SbInv * dm) - n +
                            logDetB - logDetA);
  out.klDivergence = std::max(out.klDivergence, 0.0);
  out.pinskerUpperBound = std::sqrt(0.5 * out.klDivergence);

  if (n == 1) {
    const double ma = a.mean(0), mb = b.mean(0);
    const double sa = std::sqrt(a.cov(0, 0)), sb = std::sqrt(b.cov(0, 0));
    const double smax = std::max(sa, sb);
    const double lo = std::min(ma, mb) - 10.0 * smax;
    const double hi = std::max(ma, mb) + 10.0 * smax;
    auto pdf = [](double x, double mu, double s) {
      const double z = (x - mu) / s;
      return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
    };
    std::function<double(double)> f = [&](double x) {
      return 0.5 * std::abs(pdf(x, ma, sa) - pdf(x, mb, sb));
    };
    out.exact1D =
        detail::adaptive_simpson(f, lo, hi, f(lo), f(0.5 * (lo + hi)), f(hi), 1e-10, 48);
  }
  return out;
}

struct ErrorBoundRecord {
  double mNorm = 0.0;         // ||M||_2 of the score's terminal weight
  double noiseW2 = 0.0;       // W2(start, exact noise law of the true process)
  double terminalW2 = 0.0;    // W2(reverse terminal, data law N(0, Qprime^-1))
  double terminalTVBound = 0.0;
  int gridN = 0;
  std::uint64_t seed = 0;
};

// Reverse-process accuracy for every combination of score weight M and
// starting state: how far the terminal law lands from the data law when the
// score and/or the noise initialization are misspecified.
inline std::vector<ErrorBoundRecord> error_bound_sweep(
    const LQRModel& m, const std::vector<Eigen::MatrixXd>& Ms,
    const std::vector<GaussianState>& starts, std::uint64_t seed = 0) {
  if (Ms.empty() || starts.empty())
    throw ValidationError("error_bound_sweep: need at least one M and one start");
  const GaussianState data(Eigen::VectorXd::Zero(m.n()),
                           detail::invert_value_matrix(m.Qprime()));
  const ScoreSpec trueSpec = make_score_spec(m, m.Qprime());
  const GaussianState exactNoise = density_params(trueSpec, m.grid().horizon());

  std::vector<ErrorBoundRecord> out;
  for (const Eigen::MatrixXd& M : Ms) {
    const ScoreSpec spec = make_score_spec(m, M);
    for (const GaussianState& start : starts) {
      const BackwardMoments bm = backward_moments(m, spec, start);
      const int N = m.grid().steps();
      const GaussianState terminal(bm.mean.value(N).col(0), bm.cov.value(N));
      ErrorBoundRecord rec;
      rec.mNorm = spectral_norm(M);
      rec.noiseW2 = w2_gaussians(start, exactNoise);
      rec.terminalW2 = w2_gaussians(terminal, data);
      rec.terminalTVBound = tv_gaussians(terminal, data).pinskerUpperBound;
      rec.gridN = N;
      rec.seed = seed;
      out.push_back(rec);
    }
  }
  return out;
}

}  // namespace ctlqr
