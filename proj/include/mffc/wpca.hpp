#pragma once

#include <Eigen/Eigenvalues>

#include <string>

#include "mffc/errors.hpp"
#include "mffc/filter_learning.hpp"
#include "mffc/types.hpp"

namespace mffc {

/// Whitening PCA learned from training descriptors (rows).
struct WpcaModel {
  Vector mean;         // length d
  Matrix projection;   // q x d, rows = eigenvector / sqrt(eigenvalue)
  Vector eigenvalues;  // length q, nonincreasing, positive
  bool reduced = false;  // q was lowered by the eigenvalue floor
  int requested_dim = 0;

  int dim_in() const { return static_cast<int>(projection.cols()); }
  int dim_out() const { return static_cast<int>(projection.rows()); }
};

/// Fit on an n x d training matrix via the n x n Gram route (d is typically
/// in the 10^5 range while n is in the thousands, so the d x d covariance is
/// never formed). Eigenvalues use the sample covariance with divisor n, which
/// makes the projected training covariance exactly the identity. Components
/// under the eigenvalue floor are dropped with the `reduced` flag set.
inline WpcaModel fit_wpca(const Matrix& train, int q) {
  const Eigen::Index n = train.rows();
  const Eigen::Index d = train.cols();
  if (n < 2) throw LearningError("fit_wpca: need at least two training rows");
  const Eigen::Index max_q = std::min(d, n - 1);
  if (q < 1 || q > max_q)
    throw LearningError("fit_wpca: q must be in [1, min(d, n-1)] = [1, " +
                        std::to_string(max_q) + "]");

  WpcaModel model;
  model.requested_dim = q;
  model.mean = train.colwise().mean();
  Matrix centered = train.rowwise() - model.mean.transpose();

  // Gram trick: eigenpairs (lambda, u) of C C^T / n give covariance
  // eigenvectors v = C^T u / sqrt(n lambda) (unit norm by construction).
  Matrix gram = centered * centered.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) throw LearningError("fit_wpca: eigensolver failed");

  const Vector& evals = es.eigenvalues();  // ascending
  const double floor = kEigenvalueFloor * std::max(evals(n - 1), 0.0);
  int keep = 0;
  for (int j = 0; j < q; ++j)
    if (evals(n - 1 - j) > floor && evals(n - 1 - j) > 0.0) ++keep;
  if (keep == 0) throw LearningError("fit_wpca: training covariance is all noise");
  model.reduced = keep < q;

  model.eigenvalues.resize(keep);
  model.projection.resize(keep, d);
  for (int j = 0; j < keep; ++j) {
    const double lambda = evals(n - 1 - j);
    model.eigenvalues(j) = lambda;
    Vector v = centered.transpose() * es.eigenvectors().col(n - 1 - j) /
               std::sqrt(static_cast<double>(n) * lambda);
    model.projection.row(j) = v.transpose() / std::sqrt(lambda);
  }
  detail::fix_sign_rows(model.projection);
  return model;
}

/// projection * (v - mean).
inline Vector project(const WpcaModel& model, const Vector& v) {
  if (v.size() != model.mean.size())
    throw InputError("wpca project: dimension mismatch");
  return model.projection * (v - model.mean);
}

/// Row-wise batch projection.
inline Matrix project_rows(const WpcaModel& model, const Matrix& rows) {
  if (rows.cols() != model.mean.size())
    throw InputError("wpca project: dimension mismatch");
  return (rows.rowwise() - model.mean.transpose()) * model.projection.transpose();
}

}  // namespace mffc
