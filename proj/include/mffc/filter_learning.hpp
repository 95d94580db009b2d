#pragma once

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <string>

#include "mffc/errors.hpp"
#include "mffc/gabor.hpp"
#include "mffc/patches.hpp"
#include "mffc/types.hpp"

namespace mffc {

/// Components with eigenvalues below floor*lambda_max are treated as noise;
/// whitening would divide by their square roots and explode.
inline constexpr double kEigenvalueFloor = 1e-10;

struct PcaModel {
  Matrix w_pca;       // i x k^2, orthonormal rows (top eigenvectors)
  Vector eigenvalues; // of the patch sample covariance (divisor N), nonincreasing
  Matrix whitening;   // diag(eigenvalues)^(-1/2) * w_pca
  int patch_side = 0;

  int dim() const { return static_cast<int>(w_pca.rows()); }
};

struct IcaModel {
  Matrix u;      // i x i orthogonal rotation found by the fixed-point search
  Matrix w_ica;  // u * whitening
  int patch_side = 0;
  bool converged = true;
};

namespace detail {

/// Eigen's solver returns eigenvectors with arbitrary sign; make the entry of
/// largest magnitude positive (lowest index on ties) so models are unique.
inline void fix_sign_rows(Matrix& rows) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < rows.cols(); ++c)
      if (std::abs(rows(r, c)) > std::abs(rows(r, best))) best = c;
    if (rows(r, best) < 0) rows.row(r) = -rows.row(r);
  }
}

}  // namespace detail

/// Top-i eigenfilters of the patch covariance I'(I')^T / N.
inline PcaModel learn_pca_filters(const PatchMatrix& patches, int i) {
  const Eigen::Index d = patches.data.rows();
  if (i < 1 || i > d) throw ParameterError("learn_pca_filters: i must be in [1, k^2]");
  if (patches.count() < 1) throw InputError("learn_pca_filters: empty patch matrix");

  Matrix cov = patches.data * patches.data.transpose() / static_cast<double>(patches.count());
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw LearningError("learn_pca_filters: eigensolver failed");

  // Ascending from Eigen; take from the back.
  const Vector& evals = es.eigenvalues();
  const double floor = kEigenvalueFloor * std::max(evals(d - 1), 0.0);
  int rank = 0;
  for (Eigen::Index j = 0; j < d; ++j)
    if (evals(j) > floor && evals(j) > 0.0) ++rank;
  if (rank < i)
    throw LearningError("learn_pca_filters: requested " + std::to_string(i) +
                        " components but patch covariance rank is " + std::to_string(rank));

  PcaModel model;
  model.patch_side = patches.patch_side;
  model.eigenvalues.resize(i);
  model.w_pca.resize(i, d);
  for (int j = 0; j < i; ++j) {
    model.eigenvalues(j) = evals(d - 1 - j);
    model.w_pca.row(j) = es.eigenvectors().col(d - 1 - j).transpose();
  }
  detail::fix_sign_rows(model.w_pca);
  model.whitening =
      model.eigenvalues.array().rsqrt().matrix().asDiagonal() * model.w_pca;
  return model;
}

/// Dimension-reduced whitened patches V * I' (i x N).
inline Matrix whiten(const PatchMatrix& patches, const PcaModel& model) {
  if (patches.data.rows() != model.w_pca.cols())
    throw InputError("whiten: patch dimension does not match the model");
  return model.whitening * patches.data;
}

struct FastIcaResult {
  Matrix u;            // i x i, orthogonal also when not converged
  bool converged = false;
  int iterations = 0;
};

namespace detail {

/// Symmetric orthogonalization: U <- (U U^T)^(-1/2) U.
inline Matrix orthogonalize(const Matrix& u) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(u * u.transpose());
  if (es.info() != Eigen::Success || es.eigenvalues()(0) <= 0.0)
    throw LearningError("fast_ica: degenerate iterate, cannot orthogonalize");
  Matrix inv_sqrt = es.eigenvectors() *
                    es.eigenvalues().array().rsqrt().matrix().asDiagonal() *
                    es.eigenvectors().transpose();
  return inv_sqrt * u;
}

}  // namespace detail

/// Fixed-point search for an orthogonal un-mixing rotation of whitened data,
/// run symmetrically (all components each sweep) with the kurtosis contrast
/// g(y) = y^3: U+ = E[g(UZ) Z^T] - 3U, then symmetric orthogonalization.
/// Stops when max_r |1 - |<u_r_new, u_r_old>|| < tol. Non-convergence is a
/// status, not an error; the final iterate is orthogonal regardless.
inline FastIcaResult fast_ica(const Matrix& whitened, std::uint64_t seed, int max_iter = 200,
                              double tol = 1e-6) {
  const Eigen::Index i = whitened.rows();
  const Eigen::Index n = whitened.cols();
  if (i < 1 || n < 1) throw InputError("fast_ica: empty input");
  if (max_iter < 1) throw ParameterError("fast_ica: max_iter must be >= 1");

  Rng rng(derive_seed(seed, 0x1caull));
  Matrix u(i, i);
  for (Eigen::Index r = 0; r < i; ++r)
    for (Eigen::Index c = 0; c < i; ++c) u(r, c) = rng.gaussian();
  u = detail::orthogonalize(u);

  FastIcaResult result;
  for (int it = 1; it <= max_iter; ++it) {
    Matrix y = u * whitened;                               // i x N
    Matrix u_plus = y.array().cube().matrix() * whitened.transpose() / static_cast<double>(n) -
                    3.0 * u;
    u_plus = detail::orthogonalize(u_plus);
    double delta = 0.0;
    for (Eigen::Index r = 0; r < i; ++r)
      delta = std::max(delta, std::abs(1.0 - std::abs(u_plus.row(r).dot(u.row(r)))));
    u = std::move(u_plus);
    result.iterations = it;
    if (delta < tol) {
      result.converged = true;
      break;
    }
  }
  result.u = std::move(u);
  return result;
}

/// PCA -> whiten -> FastICA; w_ica = U * V.
inline IcaModel learn_ica_filters(const PatchMatrix& patches, int i, std::uint64_t seed,
                                  int max_iter = 200, double tol = 1e-6) {
  PcaModel pca = learn_pca_filters(patches, i);
  Matrix z = whiten(patches, pca);
  FastIcaResult r = fast_ica(z, seed, max_iter, tol);
  IcaModel model;
  model.patch_side = patches.patch_side;
  model.u = r.u;
  model.w_ica = r.u * pca.whitening;
  model.converged = r.converged;
  return model;
}

/// Reshape learned rows back into k x k real filters, inverting the
/// column-major vectorization of sample_patches.
inline FilterBank bank_from_rows(const Matrix& rows, int k, BankKind kind) {
  if (rows.cols() != static_cast<Eigen::Index>(k) * k)
    throw InputError("bank_from_rows: row length is not k^2");
  FilterBank bank;
  bank.kind = kind;
  bank.filters.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index f = 0; f < rows.rows(); ++f) {
    Matrix m(k, k);
    for (int c = 0; c < k; ++c)
      for (int r = 0; r < k; ++r) m(r, c) = rows(f, c * k + r);
    bank.filters.push_back(ComplexFilter::real(std::move(m)));
  }
  return bank;
}

}  // namespace mffc
