#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mffc/filter_learning.hpp"
#include "mffc/patches.hpp"
#include "oracles.hpp"

namespace {

/// Unit-variance Laplacian variate via inverse CDF.
double laplacian(mffc::Rng& rng) {
  const double u = rng.unit() - 0.5;
  const double mag = -std::log(std::max(1.0 - 2.0 * std::abs(u), 1e-300));
  return (u < 0.0 ? -mag : mag) / std::sqrt(2.0);
}

mffc::PatchMatrix raw_matrix(mffc::Matrix data, int patch_side) {
  mffc::PatchMatrix p;
  p.data = std::move(data);
  p.patch_side = patch_side;
  return p;
}

}  // namespace

TEST_CASE("patch sampling vectorizes column-major and removes the mean") {
  mffc::Matrix img(3, 3);
  img << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  // A 3x3 patch from a 3x3 image is always the whole image.
  const mffc::PatchMatrix p = mffc::sample_patches({img}, 3, 4, 99);
  REQUIRE(p.data.rows() == 9);
  REQUIRE(p.count() == 4);
  CHECK(p.patch_side == 3);
  mffc::Vector want(9);
  want << -4, -1, 2, -3, 0, 3, -2, 1, 4;  // [1,4,7,2,5,8,3,6,9] minus mean 5
  for (Eigen::Index c = 0; c < 4; ++c)
    CHECK((p.data.col(c) - want).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("every sampled patch has zero mean") {
  mffc::Rng rng(21);
  std::vector<mffc::Matrix> imgs{oracle::random_matrix(rng, 24, 30, 0.0, 255.0),
                                 oracle::random_matrix(rng, 17, 19, 0.0, 255.0)};
  const mffc::PatchMatrix p = mffc::sample_patches(imgs, 5, 300, 7);
  REQUIRE(p.count() == 300);
  for (Eigen::Index c = 0; c < p.count(); ++c)
    CHECK(std::abs(p.data.col(c).mean()) < 1e-12);
}

TEST_CASE("patch sampling is reproducible from the seed alone") {
  mffc::Rng rng(22);
  std::vector<mffc::Matrix> imgs{oracle::random_matrix(rng, 20, 20, 0.0, 255.0),
                                 oracle::random_matrix(rng, 20, 20, 0.0, 255.0),
                                 oracle::random_matrix(rng, 20, 20, 0.0, 255.0)};
  const mffc::PatchMatrix a = mffc::sample_patches(imgs, 7, 5000, 1234);
  const mffc::PatchMatrix b = mffc::sample_patches(imgs, 7, 5000, 1234);
  const mffc::PatchMatrix c = mffc::sample_patches(imgs, 7, 5000, 1235);
  CHECK((a.data.array() == b.data.array()).all());
  CHECK_FALSE((a.data.array() == c.data.array()).all());
}

TEST_CASE("patch sampling input validation") {
  mffc::Rng rng(23);
  const mffc::Matrix img = oracle::random_matrix(rng, 10, 10, 0.0, 255.0);
  CHECK_THROWS_AS(mffc::sample_patches({}, 3, 10, 0), mffc::InputError);
  CHECK_THROWS_AS(mffc::sample_patches({img}, 0, 10, 0), mffc::ParameterError);
  CHECK_THROWS_AS(mffc::sample_patches({img}, 3, 0, 0), mffc::ParameterError);
  CHECK_THROWS_AS(mffc::sample_patches({img}, 11, 10, 0), mffc::InputError);
}

TEST_CASE("principal filters of rank-one data recover the generating direction") {
  mffc::Vector v(9);
  v << 1.0, -3.0, 2.0, 0.5, -0.25, 1.5, -0.75, 0.1, 2.5;
  mffc::Rng rng(24);
  mffc::Matrix data(9, 500);
  double sum_a2 = 0.0;
  for (Eigen::Index c = 0; c < 500; ++c) {
    const double a = rng.uniform(-2.0, 2.0);
    sum_a2 += a * a;
    data.col(c) = a * v;
  }
  const mffc::PcaModel model = mffc::learn_pca_filters(raw_matrix(data, 3), 1);
  REQUIRE(model.dim() == 1);
  CHECK(model.patch_side == 3);

  // Sign convention: the entry of largest magnitude (v's -3) comes out positive.
  mffc::Vector want = -v / v.norm();
  CHECK((model.w_pca.row(0).transpose() - want).cwiseAbs().maxCoeff() < 1e-12);

  const double want_eval = sum_a2 / 500.0 * v.squaredNorm();
  CHECK(std::abs(model.eigenvalues(0) - want_eval) < 1e-12 * want_eval);
}

TEST_CASE("requesting all k^2 components of full-rank data gives a complete basis") {
  mffc::Rng rng(25);
  // Raw (not mean-removed) columns are full rank; all 9 components exist.
  const mffc::PcaModel model =
      mffc::learn_pca_filters(raw_matrix(oracle::random_matrix(rng, 9, 200, -1.0, 1.0), 3), 9);
  REQUIRE(model.dim() == 9);
  const mffc::Matrix wwt = model.w_pca * model.w_pca.transpose();
  const mffc::Matrix wtw = model.w_pca.transpose() * model.w_pca;
  CHECK((wwt - mffc::Matrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((wtw - mffc::Matrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-10);
  for (int j = 1; j < 9; ++j) CHECK(model.eigenvalues(j) <= model.eigenvalues(j - 1));
}

TEST_CASE("mean-removed patches cannot supply all k^2 components") {
  mffc::Rng rng(26);
  const mffc::Matrix img = oracle::random_matrix(rng, 40, 40, 0.0, 255.0);
  const mffc::PatchMatrix p = mffc::sample_patches({img}, 3, 600, 5);
  // Removing each patch's mean kills the all-ones direction: rank is k^2 - 1.
  CHECK_THROWS_MATCHES(mffc::learn_pca_filters(p, 9), mffc::LearningError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("rank is 8")));
  CHECK_NOTHROW(mffc::learn_pca_filters(p, 8));
  CHECK_THROWS_AS(mffc::learn_pca_filters(p, 0), mffc::ParameterError);
  CHECK_THROWS_AS(mffc::learn_pca_filters(p, 10), mffc::ParameterError);
  CHECK_THROWS_AS(mffc::learn_pca_filters(raw_matrix(mffc::Matrix(9, 0), 3), 1),
                  mffc::InputError);
}

TEST_CASE("eigendecomposition agrees with a Jacobi reference") {
  mffc::Rng rng(27);
  const mffc::Matrix img = oracle::random_matrix(rng, 40, 40, 0.0, 255.0);
  const mffc::PatchMatrix p = mffc::sample_patches({img}, 3, 500, 11);
  const Eigen::Index d = 9;

  const mffc::Matrix cov = p.data * p.data.transpose() / static_cast<double>(p.count());
  const oracle::SymEig ref = oracle::jacobi_eigen(cov);  // ascending

  const mffc::PcaModel model = mffc::learn_pca_filters(p, 8);
  const double lmax = ref.values(d - 1);
  for (int j = 0; j < 8; ++j) {
    CHECK(std::abs(model.eigenvalues(j) - ref.values(d - 1 - j)) < 1e-10 * lmax);
    const double align = std::abs(model.w_pca.row(j).dot(ref.vectors.col(d - 1 - j)));
    CHECK(std::abs(align - 1.0) < 1e-6);
  }

  // Truncation identity: total squared reconstruction error of an i-component
  // projection equals N times the discarded eigenvalue mass.
  const int i = 4;
  const mffc::PcaModel small = mffc::learn_pca_filters(p, i);
  const mffc::Matrix recon = small.w_pca.transpose() * (small.w_pca * p.data);
  const double err = (p.data - recon).squaredNorm();
  double discarded = 0.0;
  for (Eigen::Index j = 0; j < d - i; ++j) discarded += ref.values(j);
  const double want = static_cast<double>(p.count()) * discarded;
  CHECK(std::abs(err - want) < 1e-8 * want);
}

TEST_CASE("whitening scales projections to exactly unit variance") {
  mffc::Rng rng(28);
  const mffc::Matrix img = oracle::random_matrix(rng, 40, 40, 0.0, 255.0);
  const mffc::PatchMatrix p = mffc::sample_patches({img}, 3, 800, 13);

  const mffc::PcaModel model = mffc::learn_pca_filters(p, 6);
  const mffc::Matrix z = mffc::whiten(p, model);
  REQUIRE(z.rows() == 6);
  REQUIRE(z.cols() == p.count());

  // whiten() == D^(-1/2) W X assembled by hand.
  const mffc::Matrix byhand =
      model.eigenvalues.array().rsqrt().matrix().asDiagonal() * (model.w_pca * p.data);
  CHECK((z - byhand).cwiseAbs().maxCoeff() < 1e-10 * byhand.cwiseAbs().maxCoeff());

  // Sample covariance (divisor N) of the whitened rows is the identity.
  const mffc::Matrix zc = z * z.transpose() / static_cast<double>(p.count());
  CHECK((zc - mffc::Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);

  const mffc::PcaModel one = mffc::learn_pca_filters(p, 1);
  const mffc::Matrix z1 = mffc::whiten(p, one);
  CHECK(std::abs(z1.row(0).squaredNorm() / static_cast<double>(p.count()) - 1.0) < 1e-10);

  mffc::PatchMatrix wrong = raw_matrix(mffc::Matrix::Zero(4, 10), 2);
  CHECK_THROWS_AS(mffc::whiten(wrong, model), mffc::InputError);
}

TEST_CASE("one-component fixed-point search returns a unit scalar") {
  mffc::Rng rng(29);
  mffc::Matrix z(1, 4000);
  for (Eigen::Index c = 0; c < z.cols(); ++c) z(0, c) = laplacian(rng);
  z.row(0) /= std::sqrt(z.row(0).squaredNorm() / static_cast<double>(z.cols()));
  const mffc::FastIcaResult r = mffc::fast_ica(z, 77);
  CHECK(std::abs(std::abs(r.u(0, 0)) - 1.0) < 1e-12);
  CHECK(r.converged);
  CHECK(r.iterations >= 1);
}

TEST_CASE("fixed-point search separates two uniform sources") {
  const Eigen::Index n = 20000;
  mffc::Rng rng(30);
  mffc::Matrix s(2, n);
  const double half = std::sqrt(3.0);  // uniform on [-sqrt3, sqrt3]: unit variance
  for (Eigen::Index c = 0; c < n; ++c) {
    s(0, c) = rng.uniform(-half, half);
    s(1, c) = rng.uniform(-half, half);
  }
  mffc::Matrix mix(2, 2);
  mix << 2, 1, 1, 1;
  const mffc::Matrix x = mix * s;

  const mffc::IcaModel model = mffc::learn_ica_filters(raw_matrix(x, 0), 2, 31);
  CHECK(model.converged);
  CHECK((model.w_ica - model.u * mffc::learn_pca_filters(raw_matrix(x, 0), 2).whitening)
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // Correlations of recovered rows against true sources form a signed
  // permutation: one entry near +-1 per row/column, the rest near zero.
  const mffc::Matrix y = model.w_ica * x;
  mffc::Matrix corr(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      corr(i, j) = y.row(i).dot(s.row(j)) / (y.row(i).norm() * s.row(j).norm());
  for (int i = 0; i < 2; ++i) {
    int big = std::abs(corr(i, 0)) > std::abs(corr(i, 1)) ? 0 : 1;
    CHECK(std::abs(corr(i, big)) > 0.95);
    CHECK(std::abs(corr(i, 1 - big)) < 0.05);
  }
  CHECK(std::abs(std::abs(corr(0, 0) * corr(1, 1)) - std::abs(corr(0, 1) * corr(1, 0))) >
        0.8);  // distinct columns picked
}

TEST_CASE("the rotation stays orthogonal even on non-separable data") {
  mffc::Rng rng(32);
  mffc::Matrix z(3, 5000);
  for (Eigen::Index r = 0; r < 3; ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c) z(r, c) = rng.gaussian();
  // Whiten the Gaussian cloud so the model contract holds.
  const mffc::PcaModel pca = mffc::learn_pca_filters(raw_matrix(z, 0), 3);
  const mffc::Matrix w = pca.whitening * z;
  const mffc::FastIcaResult r = mffc::fast_ica(w, 5, 30);
  const mffc::Matrix uut = r.u * r.u.transpose();
  CHECK((uut - mffc::Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(r.iterations <= 30);
  CHECK_THROWS_AS(mffc::fast_ica(mffc::Matrix(), 0), mffc::InputError);
  CHECK_THROWS_AS(mffc::fast_ica(w, 5, 0), mffc::ParameterError);
}

TEST_CASE("independent filters raise the kurtosis of their responses") {
  const Eigen::Index d = 9, n = 40000;
  mffc::Rng rng(33);
  mffc::Matrix s(d, n);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < n; ++c) s(r, c) = laplacian(rng);
  mffc::Matrix mix = oracle::random_matrix(rng, 9, 9, -1.0, 1.0);
  const mffc::Matrix x = mix * s;
  const mffc::PatchMatrix patches = raw_matrix(x, 3);

  const mffc::PcaModel pca = mffc::learn_pca_filters(patches, 9);
  const mffc::IcaModel ica = mffc::learn_ica_filters(patches, 9, 17, 400, 1e-5);
  CHECK(ica.converged);

  auto mean_excess = [&](const mffc::Matrix& rows) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < rows.rows(); ++r)
      acc += oracle::excess_kurtosis(rows.row(r).transpose());
    return acc / static_cast<double>(rows.rows());
  };
  const double k_white = mean_excess(pca.whitening * x);
  const double k_ica = mean_excess(ica.w_ica * x);
  // Laplacian sources have excess kurtosis 3; mixtures smear it toward 0.
  CHECK(k_ica > k_white + 0.5);
  CHECK(k_ica > 2.0);
}

TEST_CASE("rows reshape into filters by inverting the patch vectorization") {
  mffc::Matrix rows(2, 9);
  rows.row(0) << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  rows.row(1) << 1, 0, 0, 0, 0, 0, 0, 0, 0;
  const mffc::FilterBank bank = mffc::bank_from_rows(rows, 3, mffc::BankKind::pca);
  REQUIRE(bank.size() == 2);
  CHECK(bank.kind == mffc::BankKind::pca);
  mffc::Matrix want(3, 3);
  want << 1, 4, 7, 2, 5, 8, 3, 6, 9;  // column c fills from row entries c*k+r
  CHECK((bank.filters[0].re - want).cwiseAbs().maxCoeff() == 0.0);
  CHECK(bank.filters[0].im.cwiseAbs().maxCoeff() == 0.0);
  CHECK(bank.filters[1].re(0, 0) == 1.0);
  CHECK(bank.filters[1].re.cwiseAbs().sum() == 1.0);

  // Round trip: vectorize a known mask like sample_patches does, reshape back.
  mffc::Rng rng(34);
  const mffc::Matrix mask = oracle::random_matrix(rng, 5, 5, -1.0, 1.0);
  mffc::Matrix one_row(1, 25);
  for (int c = 0; c < 5; ++c)
    for (int r = 0; r < 5; ++r) one_row(0, c * 5 + r) = mask(r, c);
  const mffc::FilterBank back = mffc::bank_from_rows(one_row, 5, mffc::BankKind::ica);
  CHECK((back.filters[0].re - mask).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(mffc::bank_from_rows(rows, 4, mffc::BankKind::pca), mffc::InputError);
}
