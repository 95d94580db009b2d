#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mffc/errors.hpp"
#include "mffc/types.hpp"

namespace mffc {

/// Parameters of the complex Gabor wavelet family. Defaults are the de-facto
/// standard setting for face images.
struct GaborParams {
  double sigma = 2.0 * M_PI;   // envelope width (radians)
  double k_max = M_PI / 2.0;   // maximum carrier frequency
  double f = std::sqrt(2.0);   // geometric frequency spacing
  int u_max = 8;               // orientation count
  int v_max = 5;               // scale count
  int support = 7;             // discrete filter side length (odd, pixels)

  void validate() const {
    if (!(sigma > 0.0)) throw ParameterError("gabor: sigma must be > 0");
    if (!(k_max > 0.0)) throw ParameterError("gabor: k_max must be > 0");
    if (!(f > 1.0)) throw ParameterError("gabor: f must be > 1");
    if (u_max < 1) throw ParameterError("gabor: u_max must be >= 1");
    if (v_max < 1) throw ParameterError("gabor: v_max must be >= 1");
    if (support < 3 || support % 2 == 0)
      throw ParameterError("gabor: support must be an odd integer >= 3");
  }
};

/// Complex-valued filter mask held as two real planes. Real-only filters keep
/// a zero imaginary plane.
struct ComplexFilter {
  Matrix re;
  Matrix im;

  ComplexFilter() = default;
  ComplexFilter(Matrix re_, Matrix im_) : re(std::move(re_)), im(std::move(im_)) {
    if (re.rows() != re.cols() || im.rows() != im.cols() || re.rows() != im.rows())
      throw ParameterError("filter: re and im must be square with one side length");
  }

  /// Wrap a real mask with a zero imaginary plane.
  static ComplexFilter real(Matrix m) {
    Matrix z = Matrix::Zero(m.rows(), m.cols());
    return ComplexFilter(std::move(m), std::move(z));
  }

  int support() const { return static_cast<int>(re.rows()); }
};

enum class BankKind { gabor_std, gabor_cond, pca, ica };

inline const char* to_string(BankKind k) {
  switch (k) {
    case BankKind::gabor_std: return "gabor_std";
    case BankKind::gabor_cond: return "gabor_cond";
    case BankKind::pca: return "pca";
    case BankKind::ica: return "ica";
  }
  return "?";
}

inline BankKind bank_kind_from_string(const std::string& s) {
  if (s == "gabor_std") return BankKind::gabor_std;
  if (s == "gabor_cond") return BankKind::gabor_cond;
  if (s == "pca") return BankKind::pca;
  if (s == "ica") return BankKind::ica;
  throw InputError("unknown filter bank kind: " + s);
}

/// Ordered list of filters sharing one support.
struct FilterBank {
  std::vector<ComplexFilter> filters;
  BankKind kind = BankKind::gabor_std;

  int support() const {
    return filters.empty() ? 0 : filters.front().support();
  }
  std::size_t size() const { return filters.size(); }

  void validate() const {
    if (filters.empty()) throw ContractError("filter bank: empty");
    int k = filters.front().support();
    for (const auto& f : filters)
      if (f.support() != k) throw ContractError("filter bank: mixed supports");
  }
};

/// One complex Gabor wavelet, sampled at unit pixel spacing on the centered
/// odd grid x,y in [-(k-1)/2, (k-1)/2]. Entry (r,c) maps to y = r - (k-1)/2
/// (down) and x = c - (k-1)/2 (right). The subtracted DC-compensation term
/// exp(-sigma^2/2) makes the continuous filter zero-mean; the discretized mask
/// retains a small truncation-induced mean (see tests for measured bounds).
inline ComplexFilter gabor_filter(int u, int v, const GaborParams& p) {
  p.validate();
  if (u < 0 || u >= p.u_max) throw ParameterError("gabor_filter: u out of range");
  if (v < 0 || v >= p.v_max) throw ParameterError("gabor_filter: v out of range");

  const int k = p.support;
  const int c0 = (k - 1) / 2;
  const double kv = p.k_max / std::pow(p.f, v);
  const double theta = static_cast<double>(u) * M_PI / static_cast<double>(p.u_max);
  const double kx = kv * std::cos(theta);
  const double ky = kv * std::sin(theta);
  const double knorm2 = kv * kv;
  const double sigma2 = p.sigma * p.sigma;
  const double dc = std::exp(-sigma2 / 2.0);

  Matrix re(k, k), im(k, k);
  for (int r = 0; r < k; ++r) {
    const double y = static_cast<double>(r - c0);
    for (int c = 0; c < k; ++c) {
      const double x = static_cast<double>(c - c0);
      const double env = (knorm2 / sigma2) * std::exp(-knorm2 * (x * x + y * y) / (2.0 * sigma2));
      const double phase = kx * x + ky * y;
      re(r, c) = env * (std::cos(phase) - dc);
      im(r, c) = env * std::sin(phase);
    }
  }
  return ComplexFilter(std::move(re), std::move(im));
}

/// The u_max * v_max multi-scale multi-orientation bank, ordered with scale v
/// as the outer index and orientation u as the inner one.
inline FilterBank standard_ensemble(const GaborParams& p) {
  p.validate();
  FilterBank bank;
  bank.kind = BankKind::gabor_std;
  bank.filters.reserve(static_cast<std::size_t>(p.u_max) * p.v_max);
  for (int v = 0; v < p.v_max; ++v)
    for (int u = 0; u < p.u_max; ++u) bank.filters.push_back(gabor_filter(u, v, p));
  return bank;
}

/// The condensed bank: one filter per orientation, the plain average of that
/// orientation's v_max scales. No energy renormalization afterwards --
/// binarization at zero downstream is scale-invariant, so none is needed.
inline FilterBank condensed_ensemble(const GaborParams& p) {
  p.validate();
  const int k = p.support;
  FilterBank bank;
  bank.kind = BankKind::gabor_cond;
  bank.filters.reserve(static_cast<std::size_t>(p.u_max));
  for (int u = 0; u < p.u_max; ++u) {
    Matrix re = Matrix::Zero(k, k), im = Matrix::Zero(k, k);
    for (int v = 0; v < p.v_max; ++v) {
      ComplexFilter g = gabor_filter(u, v, p);
      re += g.re;
      im += g.im;
    }
    re /= static_cast<double>(p.v_max);
    im /= static_cast<double>(p.v_max);
    bank.filters.emplace_back(std::move(re), std::move(im));
  }
  return bank;
}

}  // namespace mffc
