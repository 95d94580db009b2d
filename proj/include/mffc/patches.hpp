#pragma once

#include <cstdint>
#include <vector>

#include "mffc/errors.hpp"
#include "mffc/types.hpp"

namespace mffc {

/// Zero-mean local patches stacked as columns, k^2 x N, vectorized
/// column-major (entry c*k+r holds patch(r,c)). The same order is used when
/// rows are reshaped back into filters and by the im2col oracle.
struct PatchMatrix {
  Matrix data;
  int patch_side = 0;

  std::int64_t count() const { return data.cols(); }
};

/// Draw n patches uniformly over (image, position), with replacement, and
/// remove each patch's own mean. Positions for image i come from a generator
/// seeded by (seed, i), so a parallel sampler would produce the same matrix
/// regardless of scheduling; columns are grouped by image index.
inline PatchMatrix sample_patches(const std::vector<Matrix>& images, int k, std::int64_t n,
                                  std::uint64_t seed) {
  if (images.empty()) throw InputError("sample_patches: no images");
  if (k < 1) throw ParameterError("sample_patches: patch side must be positive");
  if (n < 1) throw ParameterError("sample_patches: need at least one patch");
  for (const auto& img : images)
    if (img.rows() < k || img.cols() < k)
      throw InputError("sample_patches: image smaller than the patch side");

  // Phase 1: how many patches each image contributes.
  std::vector<std::int64_t> quota(images.size(), 0);
  Rng master(derive_seed(seed, 0));
  for (std::int64_t t = 0; t < n; ++t) ++quota[master.below(images.size())];

  PatchMatrix out;
  out.patch_side = k;
  out.data.resize(static_cast<Eigen::Index>(k) * k, n);

  // Phase 2: per-image positions from per-image derived seeds.
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Matrix& img = images[i];
    Rng rng(derive_seed(seed, 1 + i));
    const std::uint64_t max_r = static_cast<std::uint64_t>(img.rows() - k + 1);
    const std::uint64_t max_c = static_cast<std::uint64_t>(img.cols() - k + 1);
    for (std::int64_t t = 0; t < quota[i]; ++t, ++col) {
      const auto r0 = static_cast<Eigen::Index>(rng.below(max_r));
      const auto c0 = static_cast<Eigen::Index>(rng.below(max_c));
      Vector v(k * k);
      for (int c = 0; c < k; ++c)
        for (int r = 0; r < k; ++r) v[c * k + r] = img(r0 + r, c0 + c);
      out.data.col(col) = v.array() - v.mean();
    }
  }
  return out;
}

}  // namespace mffc
