#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mffc/errors.hpp"
#include "mffc/types.hpp"
#include "mffc/wpca.hpp"

namespace mffc {

/// a.b / (|a||b|). Zero against zero scores 0 (flagged); zero against
/// nonzero scores 0 as well.
inline double cosine(const Vector& a, const Vector& b, bool* degenerate = nullptr) {
  if (a.size() != b.size()) throw InputError("cosine: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (degenerate) *degenerate = (na == 0.0 && nb == 0.0);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

/// Percent of probes whose maximum-cosine gallery entry shares their label.
/// Score ties resolve to the lowest gallery index.
inline double rank1_identify(const std::vector<Vector>& gallery,
                             const std::vector<std::string>& gallery_labels,
                             const std::vector<Vector>& probes,
                             const std::vector<std::string>& probe_labels) {
  if (gallery.empty() || probes.empty()) throw InputError("rank1: empty gallery or probe set");
  if (gallery.size() != gallery_labels.size() || probes.size() != probe_labels.size())
    throw InputError("rank1: labels do not match descriptors");

  std::int64_t correct = 0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    std::size_t best = 0;
    double best_score = -2.0;
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      const double s = cosine(probes[p], gallery[g]);
      if (s > best_score) {
        best_score = s;
        best = g;
      }
    }
    if (gallery_labels[best] == probe_labels[p]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(probes.size());
}

/// Mean cosine over the four original/flipped pairings.
inline double flip_score(const Vector& a, const Vector& a_flip, const Vector& b,
                         const Vector& b_flip) {
  return (cosine(a, b) + cosine(a, b_flip) + cosine(a_flip, b) + cosine(a_flip, b_flip)) / 4.0;
}

struct RocPoint {
  double threshold, fpr, tpr;
};

struct RocResult {
  double auc_percent = 0.0;
  double acc_percent = 0.0;
  double best_threshold = 0.0;
  std::vector<RocPoint> points;  // threshold descending: (0,0) -> (1,1)
};

/// Empirical ROC over (score, same?) pairs. AUC by the midrank method (ties
/// get half credit), identical to the O(n^2) pairwise count. ACC is the best
/// (TP+TN)/total over thresholds drawn from midpoints of consecutive distinct
/// scores plus +-infinity, predicting "same" when score > threshold.
inline RocResult verify_roc(const std::vector<std::pair<double, bool>>& scores) {
  std::int64_t pos = 0, neg = 0;
  for (const auto& [s, same] : scores) (same ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw InputError("roc: need at least one positive and one negative pair");

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a].first < scores[b].first; });

  // AUC via midranks over the ascending order.
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]].first == scores[order[i]].first) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (scores[order[t]].second) rank_sum_pos += midrank;
    i = j;
  }
  RocResult out;
  out.auc_percent = 100.0 *
                    (rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0) /
                    (static_cast<double>(pos) * static_cast<double>(neg));

  // Threshold sweep. Walking thresholds downward, "score > threshold" keeps
  // cumulative counts of positives/negatives above each candidate.
  std::vector<double> candidates;
  candidates.push_back(std::numeric_limits<double>::infinity());
  for (std::size_t i = n; i-- > 1;) {
    const double lo = scores[order[i - 1]].first, hi = scores[order[i]].first;
    if (lo != hi) candidates.push_back((lo + hi) / 2.0);
  }
  candidates.push_back(-std::numeric_limits<double>::infinity());

  out.points.reserve(candidates.size());
  double best_correct = -1.0;
  std::size_t seen = 0;  // entries with score > current threshold (from the top)
  std::int64_t pos_above = 0;
  for (const double th : candidates) {
    while (seen < n && scores[order[n - 1 - seen]].first > th) {
      if (scores[order[n - 1 - seen]].second) ++pos_above;
      ++seen;
    }
    const std::int64_t neg_above = static_cast<std::int64_t>(seen) - pos_above;
    const double tpr = static_cast<double>(pos_above) / static_cast<double>(pos);
    const double fpr = static_cast<double>(neg_above) / static_cast<double>(neg);
    out.points.push_back({th, fpr, tpr});
    const double correct = static_cast<double>(pos_above) +
                           static_cast<double>(neg - neg_above);
    if (correct > best_correct) {
      best_correct = correct;
      out.best_threshold = th;
    }
  }
  out.acc_percent = 100.0 * best_correct / static_cast<double>(n);
  return out;
}

enum class EvalTask { identification, verification };

struct FoldResult {
  int fold = 0;
  double auc_percent = 0.0;
  double acc_percent = 0.0;
  int n_pairs = 0;
};

struct EvalReport {
  EvalTask task = EvalTask::identification;
  std::optional<double> rank1;
  std::optional<double> auc;
  std::optional<double> acc_mean;
  std::optional<double> acc_sd;
  std::vector<FoldResult> per_fold;
  std::vector<RocPoint> roc;  // pooled over folds for verification
  std::string config_hash;
  std::vector<std::string> notes;
};

struct VerifyPair {
  int a = 0, b = 0;  // image indices
  bool same = false;
};

/// Supplies the raw (descriptor, flipped descriptor) of one image.
using DescriptorSource = std::function<std::pair<Vector, Vector>(int)>;

/// k-fold verification: for each fold, fit WPCA on every image of the OTHER
/// folds (original + flipped rows), project the held-out fold, score its
/// pairs with flip_score, and take the best accuracy threshold on that same
/// held-out fold. Reports mean +- population SD of ACC across folds and the
/// fold-pooled ROC/AUC. q is clamped to the per-fold training rank when the
/// training set is small (noted in the report).
inline EvalReport kfold_verify(const std::vector<std::vector<VerifyPair>>& fold_pairs,
                               const std::vector<int>& image_fold,
                               const DescriptorSource& extractor, int q) {
  const int k = static_cast<int>(fold_pairs.size());
  if (k < 2) throw InputError("kfold: need at least two folds");
  for (const auto& pairs : fold_pairs)
    if (pairs.empty()) throw InputError("kfold: empty fold");
  const int n_images = static_cast<int>(image_fold.size());
  if (n_images < 2) throw InputError("kfold: need images");
  for (const auto& pairs : fold_pairs)
    for (const auto& p : pairs)
      if (p.a < 0 || p.a >= n_images || p.b < 0 || p.b >= n_images)
        throw InputError("kfold: pair references an unknown image");

  std::vector<Vector> desc(n_images), desc_flip(n_images);
  for (int i = 0; i < n_images; ++i) std::tie(desc[i], desc_flip[i]) = extractor(i);
  const Eigen::Index d = desc.empty() ? 0 : desc[0].size();

  EvalReport report;
  report.task = EvalTask::verification;
  bool clamped = false;

  std::vector<std::pair<double, bool>> pooled;
  std::vector<double> fold_acc;
  for (int f = 0; f < k; ++f) {
    std::vector<int> train;
    for (int i = 0; i < n_images; ++i)
      if (image_fold[i] != f) train.push_back(i);
    if (train.size() < 2) throw InputError("kfold: training split too small");

    Matrix rows(2 * train.size(), d);
    for (std::size_t t = 0; t < train.size(); ++t) {
      rows.row(2 * t) = desc[train[t]].transpose();
      rows.row(2 * t + 1) = desc_flip[train[t]].transpose();
    }
    const int max_q = static_cast<int>(std::min<Eigen::Index>(d, rows.rows() - 1));
    const int q_fold = std::min(q, max_q);
    if (q_fold < q) clamped = true;
    WpcaModel model = fit_wpca(rows, q_fold);

    std::vector<std::pair<double, bool>> fold_scores;
    fold_scores.reserve(fold_pairs[f].size());
    for (const VerifyPair& p : fold_pairs[f]) {
      const double s = flip_score(project(model, desc[p.a]), project(model, desc_flip[p.a]),
                                  project(model, desc[p.b]), project(model, desc_flip[p.b]));
      fold_scores.emplace_back(s, p.same);
      pooled.emplace_back(s, p.same);
    }
    RocResult roc = verify_roc(fold_scores);
    report.per_fold.push_back(
        {f + 1, roc.auc_percent, roc.acc_percent, static_cast<int>(fold_scores.size())});
    fold_acc.push_back(roc.acc_percent);
  }

  RocResult pooled_roc = verify_roc(pooled);
  report.auc = pooled_roc.auc_percent;
  report.roc = std::move(pooled_roc.points);

  const double mean = std::accumulate(fold_acc.begin(), fold_acc.end(), 0.0) /
                      static_cast<double>(k);
  double var = 0.0;
  for (double a : fold_acc) var += (a - mean) * (a - mean);
  report.acc_mean = mean;
  report.acc_sd = std::sqrt(var / static_cast<double>(k));  // population SD
  if (clamped) report.notes.push_back("wpca q clamped to the per-fold training rank");
  return report;
}

/// Video-to-video score: mean flip_score over r random frame pairs (so 4r
/// cosine terms). Frame picks come from the supplied generator.
inline double video_pair_score(const std::vector<Vector>& frames_a,
                               const std::vector<Vector>& flips_a,
                               const std::vector<Vector>& frames_b,
                               const std::vector<Vector>& flips_b, int r, Rng& rng) {
  if (frames_a.empty() || frames_b.empty()) throw InputError("video score: empty frame list");
  if (frames_a.size() != flips_a.size() || frames_b.size() != flips_b.size())
    throw InputError("video score: flips do not match frames");
  if (r < 1) throw ParameterError("video score: r must be >= 1");
  double sum = 0.0;
  for (int t = 0; t < r; ++t) {
    const auto ia = static_cast<std::size_t>(rng.below(frames_a.size()));
    const auto ib = static_cast<std::size_t>(rng.below(frames_b.size()));
    sum += flip_score(frames_a[ia], flips_a[ia], frames_b[ib], flips_b[ib]);
  }
  return sum / static_cast<double>(r);
}

}  // namespace mffc
