#pragma once

#include <bit>
#include <complex>
#include <cstddef>
#include <vector>

#include "mffc/errors.hpp"
#include "mffc/gabor.hpp"
#include "mffc/types.hpp"

namespace mffc {

// Convolution proper (kernel flipped), everywhere in this library.

enum class ConvBackend { direct, fft, auto_ };

/// auto_ switches to the FFT route when h*w*K^2 exceeds this. The scalar
/// radix-2 transform only beats blocked direct sums for large images/kernels;
/// measure with the bench tool before tuning.
inline constexpr std::size_t kDefaultFftCrossover = 6'000'000;

/// Full 2-D convolution of two real matrices: (ha+hb-1) x (wa+wb-1).
inline Matrix conv2_full(const Matrix& a, const Matrix& b) {
  if (a.size() == 0 || b.size() == 0) throw InputError("conv2_full: empty operand");
  const Eigen::Index hr = a.rows() + b.rows() - 1;
  const Eigen::Index wr = a.cols() + b.cols() - 1;
  Matrix out = Matrix::Zero(hr, wr);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i, j, b.rows(), b.cols()) += a(i, j) * b;
  return out;
}

/// Full complex convolution, parts held separately.
inline ComplexFilter conv2_full(const ComplexFilter& a, const ComplexFilter& b) {
  Matrix re = conv2_full(a.re, b.re) - conv2_full(a.im, b.im);
  Matrix im = conv2_full(a.re, b.im) + conv2_full(a.im, b.re);
  return ComplexFilter(std::move(re), std::move(im));
}

namespace detail {

/// Iterative radix-2 transform over a contiguous array of power-of-two length.
inline void fft1d(std::complex<double>* a, std::size_t n, bool inverse) {
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
  }
}

/// Row-major 2-D transform: rows, then columns via transpose.
inline void fft2d(std::vector<std::complex<double>>& a, std::size_t rows, std::size_t cols,
                  bool inverse) {
  for (std::size_t r = 0; r < rows; ++r) fft1d(a.data() + r * cols, cols, inverse);
  std::vector<std::complex<double>> t(a.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = a[r * cols + c];
  for (std::size_t c = 0; c < cols; ++c) fft1d(t.data() + c * rows, rows, inverse);
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < rows; ++r) a[r * cols + c] = t[c * rows + r];
}

inline std::size_t pow2_at_least(std::size_t n) { return std::bit_ceil(n); }

}  // namespace detail

/// Convolves one image with many same-sized kernels; "same" geometry with
/// zero padding of (K-1)/2 on every side. The image-side work (padding, or
/// the forward transform on the FFT route) is done once at construction.
class SameConvolver {
 public:
  SameConvolver(const Matrix& image, int kernel_side, ConvBackend backend = ConvBackend::auto_,
                std::size_t fft_crossover = kDefaultFftCrossover)
      : h_(static_cast<int>(image.rows())),
        w_(static_cast<int>(image.cols())),
        k_(kernel_side) {
    if (h_ < 1 || w_ < 1) throw InputError("convolve: empty image");
    if (k_ < 1 || k_ % 2 == 0) throw InputError("convolve: kernel side must be odd and positive");
    const std::size_t cost = static_cast<std::size_t>(h_) * w_ * k_ * k_;
    use_fft_ = backend == ConvBackend::fft ||
               (backend == ConvBackend::auto_ && cost > fft_crossover);
    if (!use_fft_) {
      const int pad = (k_ - 1) / 2;
      padded_ = Matrix::Zero(h_ + k_ - 1, w_ + k_ - 1);
      padded_.block(pad, pad, h_, w_) = image;
    } else {
      pr_ = detail::pow2_at_least(static_cast<std::size_t>(h_ + k_ - 1));
      pc_ = detail::pow2_at_least(static_cast<std::size_t>(w_ + k_ - 1));
      spectrum_.assign(pr_ * pc_, {0.0, 0.0});
      for (int r = 0; r < h_; ++r)
        for (int c = 0; c < w_; ++c) spectrum_[r * pc_ + c] = image(r, c);
      detail::fft2d(spectrum_, pr_, pc_, false);
    }
  }

  int kernel_side() const { return k_; }

  Matrix apply(const Matrix& kernel) const {
    if (kernel.rows() != k_ || kernel.cols() != k_)
      throw ContractError("convolve: kernel size differs from the planned side");
    return use_fft_ ? apply_fft(kernel) : apply_direct(kernel);
  }

 private:
  Matrix apply_direct(const Matrix& kernel) const {
    Matrix flipped = kernel.reverse();
    Matrix out(h_, w_);
    for (int r = 0; r < h_; ++r)
      for (int c = 0; c < w_; ++c)
        out(r, c) = padded_.block(r, c, k_, k_).cwiseProduct(flipped).sum();
    return out;
  }

  Matrix apply_fft(const Matrix& kernel) const {
    std::vector<std::complex<double>> kf(pr_ * pc_, {0.0, 0.0});
    for (int r = 0; r < k_; ++r)
      for (int c = 0; c < k_; ++c) kf[r * pc_ + c] = kernel(r, c);
    detail::fft2d(kf, pr_, pc_, false);
    for (std::size_t i = 0; i < kf.size(); ++i) kf[i] *= spectrum_[i];
    detail::fft2d(kf, pr_, pc_, true);
    const int off = (k_ - 1) / 2;
    Matrix out(h_, w_);
    for (int r = 0; r < h_; ++r)
      for (int c = 0; c < w_; ++c) out(r, c) = kf[(r + off) * pc_ + (c + off)].real();
    return out;
  }

  int h_, w_, k_;
  bool use_fft_ = false;
  Matrix padded_;                              // direct route
  std::size_t pr_ = 0, pc_ = 0;                // fft route, padded grid
  std::vector<std::complex<double>> spectrum_; // fft route, image transform
};

/// One-off "same" convolution with zero padding of (K-1)/2.
inline Matrix convolve_same(const Matrix& image, const Matrix& kernel,
                            ConvBackend backend = ConvBackend::auto_,
                            std::size_t fft_crossover = kDefaultFftCrossover) {
  if (kernel.rows() != kernel.cols()) throw InputError("convolve: kernel must be square");
  SameConvolver plan(image, static_cast<int>(kernel.rows()), backend, fft_crossover);
  return plan.apply(kernel);
}

}  // namespace mffc
