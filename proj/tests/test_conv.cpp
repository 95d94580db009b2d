#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include "mffc/conv.hpp"
#include "oracles.hpp"

TEST_CASE("full convolution with a unit impulse is the identity") {
  mffc::Rng rng(1);
  const mffc::Matrix f = oracle::random_matrix(rng, 5, 5, -1.0, 1.0);
  mffc::Matrix delta(1, 1);
  delta(0, 0) = 1.0;
  CHECK((mffc::conv2_full(delta, f).array() == f.array()).all());
  CHECK((mffc::conv2_full(f, delta).array() == f.array()).all());
}

TEST_CASE("full convolution commutes") {
  mffc::Rng rng(2);
  const mffc::Matrix a = oracle::random_matrix(rng, 3, 3, -1.0, 1.0);
  const mffc::Matrix b = oracle::random_matrix(rng, 5, 4, -1.0, 1.0);
  const mffc::Matrix ab = mffc::conv2_full(a, b);
  const mffc::Matrix ba = mffc::conv2_full(b, a);
  CHECK((ab - ba).cwiseAbs().maxCoeff() < 1e-13 * ab.cwiseAbs().maxCoeff());
}

TEST_CASE("full convolution matches the quadruple-loop sum") {
  mffc::Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const mffc::Matrix a = oracle::random_matrix(rng, 3, 3, -1.0, 1.0);
    const mffc::Matrix b = oracle::random_matrix(rng, 3, 3, -1.0, 1.0);
    const mffc::Matrix got = mffc::conv2_full(a, b);
    const mffc::Matrix want = oracle::conv2_full(a, b);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("complex convolution expands over the real planes correctly") {
  mffc::Rng rng(4);
  const mffc::ComplexFilter a(oracle::random_matrix(rng, 3, 3, -1.0, 1.0),
                              oracle::random_matrix(rng, 3, 3, -1.0, 1.0));
  const mffc::ComplexFilter b(oracle::random_matrix(rng, 4, 4, -1.0, 1.0),
                              oracle::random_matrix(rng, 4, 4, -1.0, 1.0));
  const mffc::ComplexFilter got = mffc::conv2_full(a, b);

  // Reference: convolve as genuine complex numbers.
  const Eigen::Index side = a.re.rows() + b.re.rows() - 1;
  mffc::Matrix want_re = mffc::Matrix::Zero(side, side);
  mffc::Matrix want_im = mffc::Matrix::Zero(side, side);
  for (Eigen::Index r = 0; r < side; ++r)
    for (Eigen::Index c = 0; c < side; ++c) {
      std::complex<double> acc(0.0, 0.0);
      for (Eigen::Index i = 0; i < a.re.rows(); ++i)
        for (Eigen::Index j = 0; j < a.re.cols(); ++j) {
          const Eigen::Index bi = r - i, bj = c - j;
          if (bi < 0 || bi >= b.re.rows() || bj < 0 || bj >= b.re.cols()) continue;
          acc += std::complex<double>(a.re(i, j), a.im(i, j)) *
                 std::complex<double>(b.re(bi, bj), b.im(bi, bj));
        }
      want_re(r, c) = acc.real();
      want_im(r, c) = acc.imag();
    }
  CHECK((got.re - want_re).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((got.im - want_im).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("same-geometry convolution pads with zeros") {
  mffc::Rng rng(5);
  const mffc::Matrix img = oracle::random_matrix(rng, 9, 11, 0.0, 255.0);
  const mffc::Matrix ker = oracle::random_matrix(rng, 3, 3, -1.0, 1.0);
  const mffc::Matrix got = mffc::convolve_same(img, ker, mffc::ConvBackend::direct);
  const mffc::Matrix want = oracle::conv2_same(img, ker);
  REQUIRE(got.rows() == img.rows());
  REQUIRE(got.cols() == img.cols());
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fft backend agrees with the direct backend") {
  mffc::Rng rng(6);
  for (int trial = 0; trial < 4; ++trial) {
    const int h = 16 + static_cast<int>(rng.below(17));
    const int w = 16 + static_cast<int>(rng.below(17));
    const int k = trial % 2 == 0 ? 5 : 7;
    const mffc::Matrix img = oracle::random_matrix(rng, h, w, 0.0, 255.0);
    const mffc::Matrix ker = oracle::random_matrix(rng, k, k, -1.0, 1.0);
    const mffc::Matrix direct = mffc::convolve_same(img, ker, mffc::ConvBackend::direct);
    const mffc::Matrix fft = mffc::convolve_same(img, ker, mffc::ConvBackend::fft);
    CHECK((direct - fft).cwiseAbs().maxCoeff() < 1e-8 * direct.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("auto backend is a pure execution choice") {
  mffc::Rng rng(7);
  const mffc::Matrix img = oracle::random_matrix(rng, 20, 20, 0.0, 255.0);
  const mffc::Matrix ker = oracle::random_matrix(rng, 5, 5, -1.0, 1.0);
  // Force the crossover below/above the workload; results must agree.
  const mffc::Matrix small_cut = mffc::convolve_same(img, ker, mffc::ConvBackend::auto_, 1);
  const mffc::Matrix large_cut =
      mffc::convolve_same(img, ker, mffc::ConvBackend::auto_, std::size_t{1} << 60);
  CHECK((small_cut - large_cut).cwiseAbs().maxCoeff() <
        1e-8 * large_cut.cwiseAbs().maxCoeff());
}

TEST_CASE("same-convolver plan reuse matches one-off calls") {
  mffc::Rng rng(8);
  const mffc::Matrix img = oracle::random_matrix(rng, 12, 12, 0.0, 255.0);
  mffc::SameConvolver plan(img, 3, mffc::ConvBackend::direct);
  for (int trial = 0; trial < 3; ++trial) {
    const mffc::Matrix ker = oracle::random_matrix(rng, 3, 3, -1.0, 1.0);
    CHECK((plan.apply(ker) - mffc::convolve_same(img, ker, mffc::ConvBackend::direct))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("convolution input validation") {
  mffc::Rng rng(9);
  const mffc::Matrix img = oracle::random_matrix(rng, 8, 8, 0.0, 1.0);
  CHECK_THROWS_AS(mffc::convolve_same(img, mffc::Matrix::Zero(3, 4)), mffc::InputError);
  CHECK_THROWS_AS(mffc::convolve_same(img, mffc::Matrix::Zero(4, 4)), mffc::InputError);
  CHECK_THROWS_AS(mffc::conv2_full(mffc::Matrix(), img), mffc::InputError);
  mffc::SameConvolver plan(img, 3);
  CHECK_THROWS_AS(plan.apply(mffc::Matrix::Zero(5, 5)), mffc::ContractError);
  CHECK_THROWS_AS(mffc::SameConvolver(mffc::Matrix(), 3), mffc::InputError);
}
