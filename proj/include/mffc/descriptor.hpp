#pragma once

#include <cstdint>
#include <vector>

#include "mffc/conv.hpp"
#include "mffc/diversify.hpp"
#include "mffc/errors.hpp"
#include "mffc/types.hpp"

namespace mffc {

enum class FilterPart { re, im };

/// Responses of one image under every offspring filter, image-sized ("same"
/// geometry, zero padding of (K-1)/2). Only unique offspring are convolved;
/// the logical index resolves through the set's dedup map, so deduplicated
/// sets expose all L responses without recomputing twins.
struct ResponseStack {
  std::vector<Matrix> unique_responses;
  std::vector<std::int32_t> dedup;  // empty = identity mapping
  std::vector<int> fold_sizes;
  int rows = 0, cols = 0;

  std::int64_t logical_count() const {
    std::int64_t l = 1;
    for (int f : fold_sizes) l *= f;
    return l;
  }

  const Matrix& at_logical(std::int64_t l) const {
    if (l < 0 || l >= logical_count()) throw ParameterError("responses: index out of range");
    return unique_responses[dedup.empty() ? static_cast<std::size_t>(l)
                                          : static_cast<std::size_t>(dedup[l])];
  }
};

/// Convolve (kernel flipped) the image with the chosen part of every unique
/// offspring filter.
inline ResponseStack convolve_stack(const Matrix& image, const OffspringSet& set,
                                    FilterPart part = FilterPart::re,
                                    ConvBackend backend = ConvBackend::auto_,
                                    std::size_t fft_crossover = kDefaultFftCrossover) {
  if (image.size() == 0) throw InputError("convolve_stack: empty image");
  if (set.filters.empty()) throw InputError("convolve_stack: empty offspring set");

  ResponseStack stack;
  stack.rows = static_cast<int>(image.rows());
  stack.cols = static_cast<int>(image.cols());
  stack.fold_sizes = set.fold_sizes;
  stack.dedup = set.dedup;
  stack.unique_responses.reserve(set.filters.size());

  SameConvolver plan(image, set.offspring_side, backend, fft_crossover);
  for (const auto& f : set.filters)
    stack.unique_responses.push_back(plan.apply(part == FilterPart::re ? f.re : f.im));
  return stack;
}

/// T integer images with values in [0, 2^bits - 1]; pixel (x,y) of image t
/// packs the signs of responses t*bits .. t*bits+bits-1 (bit beta-1 set when
/// response beta is strictly positive; exact zero gives a 0 bit).
struct FeatureImages {
  std::vector<IntMatrix> images;
  int bits = 0;
};

inline FeatureImages binarize_encode(const ResponseStack& stack, int bits) {
  if (bits < 1 || bits > 20) throw ParameterError("binarize_encode: bits must be in [1, 20]");
  const std::int64_t total = stack.logical_count();
  if (total % bits != 0)
    throw ContractError("binarize_encode: response count not divisible by the bit width");

  FeatureImages feat;
  feat.bits = bits;
  const std::int64_t t_count = total / bits;
  feat.images.reserve(static_cast<std::size_t>(t_count));
  for (std::int64_t t = 0; t < t_count; ++t) {
    IntMatrix img = IntMatrix::Zero(stack.rows, stack.cols);
    for (int beta = 0; beta < bits; ++beta) {
      const Matrix& resp = stack.at_logical(t * bits + beta);
      const std::int32_t weight = std::int32_t{1} << beta;
      for (int r = 0; r < stack.rows; ++r)
        for (int c = 0; c < stack.cols; ++c)
          if (resp(r, c) > 0.0) img(r, c) += weight;
    }
    feat.images.push_back(std::move(img));
  }
  return feat;
}

/// Block grid over the image. At overlap 0 the blocks tile the image, the
/// last row/column absorbing any remainder. At overlap 0.5 each block's side
/// doubles while anchors stay at the non-overlapping grid origins (stride =
/// the non-overlapped side), clipped at the image border; the count is
/// unchanged.
struct BlockSpec {
  int grid_rows = 8;
  int grid_cols = 8;
  double overlap_ratio = 0.0;  // 0 or 0.5

  int block_count() const { return grid_rows * grid_cols; }

  void validate() const {
    if (grid_rows < 1 || grid_cols < 1) throw ParameterError("blocks: grid must be positive");
    if (overlap_ratio != 0.0 && overlap_ratio != 0.5)
      throw ParameterError("blocks: overlap ratio must be 0 or 0.5");
  }
};

struct BlockExtent {
  int r0, c0, height, width;
};

/// Geometry of every block, row-major over the grid.
inline std::vector<BlockExtent> block_extents(int h, int w, const BlockSpec& spec) {
  spec.validate();
  if (spec.grid_rows > h || spec.grid_cols > w)
    throw InputError("blocks: grid larger than the image");

  const int base_h = h / spec.grid_rows;
  const int base_w = w / spec.grid_cols;
  const bool overlapped = spec.overlap_ratio == 0.5;
  std::vector<BlockExtent> out;
  out.reserve(static_cast<std::size_t>(spec.block_count()));
  for (int gr = 0; gr < spec.grid_rows; ++gr) {
    for (int gc = 0; gc < spec.grid_cols; ++gc) {
      BlockExtent e{};
      e.r0 = gr * base_h;
      e.c0 = gc * base_w;
      if (overlapped) {
        e.height = std::min(2 * base_h, h - e.r0);
        e.width = std::min(2 * base_w, w - e.c0);
      } else {
        e.height = (gr == spec.grid_rows - 1) ? h - e.r0 : base_h;
        e.width = (gc == spec.grid_cols - 1) ? w - e.c0 : base_w;
      }
      out.push_back(e);
    }
  }
  return out;
}

/// Per feature image t and block b, the counts of each code value. Row
/// (t * B + b) of the result holds the 2^bits-bin histogram of block b in
/// image t; counts are exact integers stored as doubles.
inline Matrix block_histograms(const FeatureImages& feat, const BlockSpec& spec) {
  if (feat.images.empty()) throw InputError("block_histograms: no feature images");
  const int h = static_cast<int>(feat.images.front().rows());
  const int w = static_cast<int>(feat.images.front().cols());
  const std::vector<BlockExtent> blocks = block_extents(h, w, spec);
  const int bins = 1 << feat.bits;

  Matrix hist = Matrix::Zero(static_cast<Eigen::Index>(feat.images.size()) * blocks.size(),
                             bins);
  for (std::size_t t = 0; t < feat.images.size(); ++t) {
    const IntMatrix& img = feat.images[t];
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const BlockExtent& e = blocks[b];
      Eigen::Index row = static_cast<Eigen::Index>(t) * blocks.size() + b;
      for (int r = e.r0; r < e.r0 + e.height; ++r)
        for (int c = e.c0; c < e.c0 + e.width; ++c) hist(row, img(r, c)) += 1.0;
    }
  }
  return hist;
}

/// Full raw descriptor of one image: for each part (re then im), responses ->
/// feature images -> block histograms, flattened part-slowest as
/// (part, t, block, bin). Length = 2^bits * B * T * 2.
inline Vector assemble(const Matrix& image, const OffspringSet& offspring_re,
                       const OffspringSet& offspring_im, const BlockSpec& spec,
                       ConvBackend backend = ConvBackend::auto_,
                       std::size_t fft_crossover = kDefaultFftCrossover) {
  if (offspring_re.fold_sizes != offspring_im.fold_sizes)
    throw ContractError("assemble: offspring sets have different fold shapes");

  const int bits = offspring_re.fold_sizes.back();
  std::vector<Vector> parts;
  for (const OffspringSet* set : {&offspring_re, &offspring_im}) {
    ResponseStack stack = convolve_stack(image, *set, FilterPart::re, backend, fft_crossover);
    FeatureImages feat = binarize_encode(stack, bits);
    Matrix hist = block_histograms(feat, spec);
    Vector flat(hist.size());
    Eigen::Index pos = 0;
    for (Eigen::Index row = 0; row < hist.rows(); ++row)
      for (Eigen::Index bin = 0; bin < hist.cols(); ++bin) flat[pos++] = hist(row, bin);
    parts.push_back(std::move(flat));
  }

  Vector out(parts[0].size() + parts[1].size());
  out << parts[0], parts[1];
  return out;
}

}  // namespace mffc
