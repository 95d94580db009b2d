#pragma once

#include <string>

#include "mffc/errors.hpp"
#include "mffc/types.hpp"

namespace mffc {

enum class PoolMode { avg, max, none };

inline const char* to_string(PoolMode m) {
  switch (m) {
    case PoolMode::avg: return "avg";
    case PoolMode::max: return "max";
    case PoolMode::none: return "none";
  }
  return "?";
}

inline PoolMode pool_mode_from_string(const std::string& s) {
  if (s == "avg") return PoolMode::avg;
  if (s == "max") return PoolMode::max;
  if (s == "none") return PoolMode::none;
  throw InputError("unknown pool mode: " + s);
}

/// Strided 1-D pooling over the flat histogram vector.
struct PoolSpec {
  int window = 2;  // P
  int stride = 2;  // S
  PoolMode mode = PoolMode::avg;

  void validate() const {
    if (window < 1 || stride < 1) throw ParameterError("pool: window and stride must be >= 1");
  }
};

/// Windows must tile exactly: (d - P) divisible by S, no implicit padding.
/// Output length d' = (d - P)/S + 1.
inline Vector pool(const Vector& h, const PoolSpec& spec) {
  spec.validate();
  if (spec.mode == PoolMode::none) return h;
  const Eigen::Index d = h.size();
  if (d < spec.window) throw InputError("pool: input shorter than the window");
  if ((d - spec.window) % spec.stride != 0)
    throw InputError("pool: (d - window) not divisible by the stride");

  const Eigen::Index d_out = (d - spec.window) / spec.stride + 1;
  Vector out(d_out);
  for (Eigen::Index j = 0; j < d_out; ++j) {
    auto seg = h.segment(j * spec.stride, spec.window);
    out[j] = spec.mode == PoolMode::avg ? seg.mean() : seg.maxCoeff();
  }
  return out;
}

struct Normalized {
  Vector values;
  bool zero_input = false;  // all-zero inputs map to zero instead of erroring
};

/// Elementwise square root, then L2 normalization. Entries must be
/// nonnegative (histogram counts or their averages).
inline Normalized normalize(const Vector& v) {
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (v[j] < 0.0) throw InputError("normalize: negative entry");
  Normalized out;
  out.values = v.array().sqrt();
  const double norm = out.values.norm();
  if (norm == 0.0) {
    out.zero_input = true;
    return out;
  }
  out.values /= norm;
  return out;
}

}  // namespace mffc
