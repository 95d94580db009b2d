#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "mffc/conv.hpp"
#include "mffc/errors.hpp"
#include "mffc/gabor.hpp"

namespace mffc {

enum class OffspringKind { gabor_gabor, gabor_pca, gabor_ica, pca_pca, ica_ica, generic };

inline const char* to_string(OffspringKind k) {
  switch (k) {
    case OffspringKind::gabor_gabor: return "gabor_gabor";
    case OffspringKind::gabor_pca: return "gabor_pca";
    case OffspringKind::gabor_ica: return "gabor_ica";
    case OffspringKind::pca_pca: return "pca_pca";
    case OffspringKind::ica_ica: return "ica_ica";
    case OffspringKind::generic: return "generic";
  }
  return "?";
}

inline OffspringKind offspring_kind_from_string(const std::string& s) {
  if (s == "gabor_gabor") return OffspringKind::gabor_gabor;
  if (s == "gabor_pca") return OffspringKind::gabor_pca;
  if (s == "gabor_ica") return OffspringKind::gabor_ica;
  if (s == "pca_pca") return OffspringKind::pca_pca;
  if (s == "ica_ica") return OffspringKind::ica_ica;
  if (s == "generic") return OffspringKind::generic;
  throw InputError("unknown offspring kind: " + s);
}

/// Diversified filter set from an M-fold cross of filter banks. Logical index
/// l in [0, L) enumerates fold combinations with the LAST fold varying
/// fastest. After deduplication, `filters` holds only the unique offspring and
/// `dedup` resolves each logical index to its representative; before it,
/// `dedup` is empty and logical index == storage index.
struct OffspringSet {
  std::vector<ComplexFilter> filters;
  std::vector<int> fold_sizes;        // F_1..F_M
  int offspring_side = 0;             // K = M(k-1)+1 when uncropped
  OffspringKind kind = OffspringKind::generic;
  bool self_cross = false;            // all folds were one identical bank
  std::vector<std::int32_t> dedup;    // empty, or length L with values < filters.size()

  std::int64_t logical_count() const {
    std::int64_t l = 1;
    for (int f : fold_sizes) l *= f;
    return l;
  }
  std::size_t unique_count() const { return filters.size(); }
  bool deduplicated() const { return !dedup.empty(); }

  /// Storage index of logical offspring l.
  std::int32_t storage_index(std::int64_t l) const {
    if (l < 0 || l >= logical_count()) throw ParameterError("offspring: logical index out of range");
    return dedup.empty() ? static_cast<std::int32_t>(l) : dedup[static_cast<std::size_t>(l)];
  }

  const ComplexFilter& at_logical(std::int64_t l) const { return filters[storage_index(l)]; }
};

/// Decompose logical index l into one filter index per fold (last fold fastest).
inline std::vector<int> fold_indices(std::int64_t l, const std::vector<int>& fold_sizes) {
  std::vector<int> idx(fold_sizes.size());
  for (std::size_t m = fold_sizes.size(); m-- > 0;) {
    idx[m] = static_cast<int>(l % fold_sizes[m]);
    l /= fold_sizes[m];
  }
  return idx;
}

/// M-fold filter-to-filter convolution: every combination of one filter per
/// fold, fully convolved. L = prod F_m offspring of side K = M(k-1)+1.
inline OffspringSet mffc(const std::vector<FilterBank>& folds) {
  if (folds.empty()) throw InputError("mffc: empty fold list");
  const int k = folds.front().support();
  for (const auto& bank : folds) {
    bank.validate();
    if (bank.support() != k) throw InputError("mffc: folds have mixed supports");
  }

  OffspringSet set;
  set.fold_sizes.reserve(folds.size());
  for (const auto& bank : folds) set.fold_sizes.push_back(static_cast<int>(bank.size()));
  set.offspring_side = static_cast<int>(folds.size()) * (k - 1) + 1;

  auto same_filter = [](const ComplexFilter& a, const ComplexFilter& b) {
    return a.support() == b.support() && (a.re.array() == b.re.array()).all() &&
           (a.im.array() == b.im.array()).all();
  };
  set.self_cross = true;
  for (std::size_t m = 1; m < folds.size() && set.self_cross; ++m) {
    if (folds[m].size() != folds[0].size()) set.self_cross = false;
    for (std::size_t i = 0; i < folds[0].size() && set.self_cross; ++i)
      if (!same_filter(folds[m].filters[i], folds[0].filters[i])) set.self_cross = false;
  }

  const std::int64_t total = set.logical_count();
  set.filters.reserve(static_cast<std::size_t>(total));
  for (std::int64_t l = 0; l < total; ++l) {
    std::vector<int> idx = fold_indices(l, set.fold_sizes);
    ComplexFilter acc = folds[0].filters[idx[0]];
    for (std::size_t m = 1; m < folds.size(); ++m)
      acc = conv2_full(acc, folds[m].filters[idx[m]]);
    set.filters.push_back(std::move(acc));
  }
  return set;
}

/// Prune offspring that differ only by fold-index permutation. Valid for
/// self-cross sets: convolution commutes, so sigma over tuple (i1..iM) equals
/// sigma over its sorted tuple. Retains nondecreasing tuples; every logical
/// index resolves through the dedup map. Pruning is by index symmetry alone,
/// never by numeric comparison.
inline OffspringSet dedup_commutative(const OffspringSet& set) {
  if (!set.self_cross)
    throw ContractError("dedup: commutative pruning needs identical folds in every position");
  if (set.deduplicated()) return set;

  OffspringSet out;
  out.fold_sizes = set.fold_sizes;
  out.offspring_side = set.offspring_side;
  out.kind = set.kind;
  out.self_cross = true;

  const std::int64_t total = set.logical_count();
  // Representative of l = the logical index of its sorted fold tuple.
  std::vector<std::int32_t> unique_slot(static_cast<std::size_t>(total), -1);
  out.dedup.resize(static_cast<std::size_t>(total));
  for (std::int64_t l = 0; l < total; ++l) {
    std::vector<int> idx = fold_indices(l, set.fold_sizes);
    std::vector<int> sorted_idx = idx;
    std::sort(sorted_idx.begin(), sorted_idx.end());
    std::int64_t rep = 0;
    for (std::size_t m = 0; m < sorted_idx.size(); ++m)
      rep = rep * set.fold_sizes[m] + sorted_idx[m];
    if (unique_slot[static_cast<std::size_t>(rep)] < 0) {
      unique_slot[static_cast<std::size_t>(rep)] = static_cast<std::int32_t>(out.filters.size());
      out.filters.push_back(set.filters[static_cast<std::size_t>(rep)]);
    }
    out.dedup[static_cast<std::size_t>(l)] = unique_slot[static_cast<std::size_t>(rep)];
  }
  return out;
}

/// Centered k x k window of both parts. Offspring may optionally be cropped
/// back to the constituent size; off by default throughout the pipeline.
inline ComplexFilter central_crop(const ComplexFilter& f, int k) {
  const int side = f.support();
  if (k % 2 == 0 || k < 1) throw InputError("central_crop: window must be odd and positive");
  if (k > side) throw InputError("central_crop: window exceeds filter side");
  if ((side - k) % 2 != 0) throw InputError("central_crop: side difference must be even");
  const int off = (side - k) / 2;
  return ComplexFilter(f.re.block(off, off, k, k), f.im.block(off, off, k, k));
}

/// One real-payload bank per Gabor constituent (the real or imaginary parts).
inline FilterBank constituent_bank(const FilterBank& bank, bool imaginary) {
  FilterBank out;
  out.kind = bank.kind;
  out.filters.reserve(bank.size());
  for (const auto& f : bank.filters)
    out.filters.push_back(ComplexFilter::real(imaginary ? f.im : f.re));
  return out;
}

struct OffspringPair {
  OffspringSet re;  // offspring of the Gabor real constituents
  OffspringSet im;  // offspring of the Gabor imaginary constituents
};

/// Build the offspring pair driving the convolutional stage. The two Gabor
/// constituents act as independent real banks: the real-part set crosses the
/// real constituents, the imaginary-part set the imaginary ones. Learned
/// (PCA/ICA) filters enter as the second fold and are real, so only the Gabor
/// fold differs between the two sets; heterogeneous crosses are not pruned.
inline OffspringPair make_offspring(OffspringKind kind, const FilterBank& gabor,
                                    const FilterBank* learned, int folds = 2) {
  if (folds < 1) throw ParameterError("make_offspring: folds must be >= 1");

  auto self_cross = [&](const FilterBank& bank) {
    OffspringSet s = mffc(std::vector<FilterBank>(static_cast<std::size_t>(folds), bank));
    return folds >= 2 ? dedup_commutative(s) : s;
  };

  OffspringPair pair;
  switch (kind) {
    case OffspringKind::gabor_gabor: {
      if (gabor.kind != BankKind::gabor_cond && gabor.kind != BankKind::gabor_std)
        throw ContractError("make_offspring: first bank must be Gabor");
      pair.re = self_cross(constituent_bank(gabor, false));
      pair.im = self_cross(constituent_bank(gabor, true));
      break;
    }
    case OffspringKind::gabor_pca:
    case OffspringKind::gabor_ica: {
      if (gabor.kind != BankKind::gabor_cond && gabor.kind != BankKind::gabor_std)
        throw ContractError("make_offspring: first bank must be Gabor");
      if (learned == nullptr)
        throw ContractError("make_offspring: learned bank required for this kind");
      if (folds != 2)
        throw ContractError("make_offspring: learned-fold offspring are two-fold");
      const BankKind want =
          kind == OffspringKind::gabor_pca ? BankKind::pca : BankKind::ica;
      if (learned->kind != want)
        throw ContractError("make_offspring: learned bank kind does not match offspring kind");
      pair.re = mffc({constituent_bank(gabor, false), *learned});
      pair.im = mffc({constituent_bank(gabor, true), *learned});
      break;
    }
    case OffspringKind::pca_pca:
    case OffspringKind::ica_ica: {
      // Representable but untested: self-cross of a learned bank. The
      // imaginary stream is identically zero for real inputs.
      if (learned == nullptr)
        throw ContractError("make_offspring: learned bank required for this kind");
      pair.re = self_cross(constituent_bank(*learned, false));
      pair.im = self_cross(constituent_bank(*learned, true));
      break;
    }
    case OffspringKind::generic:
      throw ContractError("make_offspring: generic sets come from mffc() directly");
  }
  pair.re.kind = kind;
  pair.im.kind = kind;
  return pair;
}

}  // namespace mffc
