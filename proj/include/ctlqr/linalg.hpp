#pragma once
// Small dense linear algebra helpers shared by the solvers.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ctlqr/errors.hpp"

namespace ctlqr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

inline double symmetry_deviation(const MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

// Largest singular value. Matrices here are tiny, so SVD cost is irrelevant.
inline double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
}

inline double min_eigenvalue_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Nearest (Frobenius) positive semidefinite matrix: clip negative eigenvalues.
inline MatrixXd psd_project(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return symmetrize(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

// Symmetric square root of a PSD matrix. Eigenvalues slightly below zero
// (round-off) are clamped; genuinely negative ones are an error.
inline MatrixXd sqrt_psd(const MatrixXd& m, double tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  VectorXd lam = es.eigenvalues();
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -tol * scale)
      throw NumericalError("sqrt_psd: matrix has eigenvalue " + std::to_string(lam(i)));
    if (lam(i) < 0.0) lam(i) = 0.0;
  }
  VectorXd root = lam.cwiseSqrt();
  return symmetrize(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

// Inverse of a symmetric positive definite matrix, guarded by a condition
// number estimate. A smallest eigenvalue below 1e-12 (relative to the larger
// of 1 and lambda_max) or lambda_max/lambda_min above condLimit raises
// NumericalError tagged with `label`.
inline MatrixXd spd_inverse(const MatrixXd& m, const std::string& label,
                            double condLimit = 1e12) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  const VectorXd& lam = es.eigenvalues();
  const double lo = lam.minCoeff();
  const double hi = lam.maxCoeff();
  if (!(lo > 1e-12 * std::max(1.0, hi)) || hi / lo > condLimit)
    throw NumericalError(label + ": matrix numerically singular (eigenvalues in [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "])");
  VectorXd inv = lam.cwiseInverse();
  return symmetrize(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}

// log det of a symmetric positive definite matrix via Cholesky.
inline double log_det_spd(const MatrixXd& m, const std::string& label) {
  Eigen::LLT<MatrixXd> llt(symmetrize(m));
  if (llt.info() != Eigen::Success)
    throw NumericalError(label + ": log-determinant of a non-SPD matrix");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// <A, B>_F = tr(A^T B).
inline double frobenius_inner(const MatrixXd& a, const MatrixXd& b) {
  return a.cwiseProduct(b).sum();
}

// Pairwise (cascade) summation: error grows like log n instead of n, and the
// result does not depend on accumulation chunking.
inline double pairwise_sum(const std::vector<double>& xs, std::size_t lo, std::size_t hi) {
  const std::size_t n = hi - lo;
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += xs[i];
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return pairwise_sum(xs, lo, mid) + pairwise_sum(xs, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& xs) {
  return pairwise_sum(xs, 0, xs.size());
}

}  // namespace ctlqr
