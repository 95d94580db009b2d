#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mffc/config.hpp"
#include "mffc/descriptor.hpp"
#include "mffc/diversify.hpp"
#include "mffc/errors.hpp"
#include "mffc/eval.hpp"
#include "mffc/filter_learning.hpp"
#include "mffc/gabor.hpp"
#include "mffc/image.hpp"
#include "mffc/io.hpp"
#include "mffc/patches.hpp"
#include "mffc/pooling.hpp"
#include "mffc/wpca.hpp"

namespace mffc {

/// Sample patches from the images and learn a PCA or ICA bank of
/// cfg.learned_filters filters with side cfg.gabor.support.
inline FilterBank learn_bank(const std::vector<Matrix>& images, const PipelineConfig& cfg,
                             BankKind kind) {
  if (kind != BankKind::pca && kind != BankKind::ica)
    throw ParameterError("learn_bank: kind must be pca or ica");
  PatchMatrix patches =
      sample_patches(images, cfg.gabor.support, cfg.patch_count, cfg.seed);
  Matrix rows;
  if (kind == BankKind::pca) {
    rows = learn_pca_filters(patches, cfg.learned_filters).w_pca;
  } else {
    rows = learn_ica_filters(patches, cfg.learned_filters, cfg.seed).w_ica;
  }
  return bank_from_rows(rows, cfg.gabor.support, kind);
}

/// Offspring pair for the configured descriptor kind. The learned bank is
/// required (and must match kind) for gabor_pca / gabor_ica.
inline OffspringPair build_offspring(const PipelineConfig& cfg, const FilterBank* learned) {
  const FilterBank gabor = condensed_ensemble(cfg.gabor);
  switch (cfg.kind) {
    case DescriptorKind::gabor:
      return make_offspring(OffspringKind::gabor_gabor, gabor, nullptr, cfg.folds);
    case DescriptorKind::gabor_pca:
      return make_offspring(OffspringKind::gabor_pca, gabor, learned, cfg.folds);
    case DescriptorKind::gabor_ica:
      return make_offspring(OffspringKind::gabor_ica, gabor, learned, cfg.folds);
  }
  throw ParameterError("build_offspring: unknown descriptor kind");
}

/// Raw per-image descriptor: assemble -> pool -> sqrt+L2. This is the vector
/// descriptor stores hold; WPCA compression happens at evaluation time.
inline Vector extract_descriptor(const Matrix& image, const OffspringPair& offspring,
                                 const PipelineConfig& cfg) {
  BlockSpec spec{cfg.grid_rows, cfg.grid_cols, cfg.overlap_ratio};
  Vector raw = assemble(image, offspring.re, offspring.im, spec, cfg.backend,
                        cfg.fft_crossover);
  return normalize(pool(raw, cfg.pool)).values;
}

/// Threads to use: explicit config wins; otherwise MFFC_THREADS; else 1.
inline int resolve_threads(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("MFFC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return 1;
}

/// Extract descriptors for images [0, count) concurrently; image_at must be
/// safe to call from several threads. Row i is image i's descriptor, so the
/// result is independent of scheduling.
inline MatrixF batch_descriptors(int count, const std::function<Matrix(int)>& image_at,
                                 const OffspringPair& offspring, const PipelineConfig& cfg) {
  if (count < 1) throw InputError("batch: no images");
  const int threads = std::min(resolve_threads(cfg.threads), count);

  MatrixF rows;
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::once_flag size_once;

  auto worker = [&]() {
    try {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        if (failed.load()) return;
        Vector desc = extract_descriptor(image_at(i), offspring, cfg);
        std::call_once(size_once, [&] { rows.resize(count, desc.size()); });
        if (desc.size() != rows.cols())
          throw ContractError("batch: images produce differently sized descriptors");
        rows.row(i) = desc.cast<float>().transpose();
      }
    } catch (...) {
      std::scoped_lock lock(error_mutex);
      if (!error) error = std::current_exception();
      failed.store(true);
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    pool_threads.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
    for (auto& th : pool_threads) th.join();
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

/// Load the image behind a manifest entry; flip entries load their source
/// and mirror it. The first image's size becomes the batch contract.
class ManifestImageLoader {
 public:
  ManifestImageLoader(std::string root, std::vector<ManifestEntry> entries)
      : root_(std::move(root)), entries_(std::move(entries)) {
    if (entries_.empty()) throw InputError("manifest: no entries to load");
    Matrix first = load_physical(0);
    h_ = static_cast<int>(first.rows());
    w_ = static_cast<int>(first.cols());
  }

  int count() const { return static_cast<int>(entries_.size()); }
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  int height() const { return h_; }
  int width() const { return w_; }

  Matrix operator()(int i) const {
    const ManifestEntry& e = entries_.at(static_cast<std::size_t>(i));
    if (e.flip_of.empty()) {
      Matrix img = load_image(resolve(e.path), h_, w_);
      return img;
    }
    return hflip(load_image(resolve(e.flip_of), h_, w_));
  }

 private:
  Matrix load_physical(int i) const {
    const ManifestEntry& e = entries_.at(static_cast<std::size_t>(i));
    return load_image(resolve(e.flip_of.empty() ? e.path : e.flip_of));
  }

  std::string resolve(const std::string& p) const {
    if (p.empty()) throw InputError("manifest: empty path");
    if (p.front() == '/' || root_.empty()) return p;
    return root_ + "/" + p;
  }

  std::string root_;
  std::vector<ManifestEntry> entries_;
  int h_ = 0, w_ = 0;
};

/// Identification over a descriptor store: WPCA trained on the gallery rows
/// (q clamped to the gallery rank at desk scale, noted in the report), then
/// rank-1 with cosine scores.
inline EvalReport eval_identification(const DescriptorStore& store, int q) {
  std::vector<int> gallery_rows, probe_rows;
  for (std::size_t i = 0; i < store.entries.size(); ++i) {
    const std::string& split = store.entries[i].split;
    if (split == "gallery") gallery_rows.push_back(static_cast<int>(i));
    else if (split == "probe") probe_rows.push_back(static_cast<int>(i));
  }
  if (gallery_rows.empty() || probe_rows.empty())
    throw InputError("eval: store needs gallery and probe splits");

  const Eigen::Index d = store.rows.cols();
  Matrix train(gallery_rows.size(), d);
  for (std::size_t i = 0; i < gallery_rows.size(); ++i)
    train.row(i) = store.rows.row(gallery_rows[i]).cast<double>();

  EvalReport report;
  report.task = EvalTask::identification;
  const int max_q = static_cast<int>(std::min<Eigen::Index>(d, train.rows() - 1));
  const int q_eff = std::min(q, max_q);
  if (q_eff < q)
    report.notes.push_back("wpca q clamped to gallery rank " + std::to_string(q_eff));
  WpcaModel model = fit_wpca(train, q_eff);
  if (model.reduced)
    report.notes.push_back("wpca dropped components under the eigenvalue floor");

  std::vector<Vector> gallery, probes;
  std::vector<std::string> gallery_labels, probe_labels;
  for (int i : gallery_rows) {
    gallery.push_back(project(model, store.rows.row(i).cast<double>().transpose()));
    gallery_labels.push_back(store.entries[static_cast<std::size_t>(i)].subject_id);
  }
  for (int i : probe_rows) {
    probes.push_back(project(model, store.rows.row(i).cast<double>().transpose()));
    probe_labels.push_back(store.entries[static_cast<std::size_t>(i)].subject_id);
  }
  report.rank1 = rank1_identify(gallery, gallery_labels, probes, probe_labels);
  report.config_hash = store.config_hash;
  return report;
}

namespace detail {

/// "fold_3" -> 2 (zero-based); anything else -> -1 (training-only image).
inline int fold_of_split(const std::string& split) {
  if (split.rfind("fold_", 0) != 0) return -1;
  try {
    return std::stoi(split.substr(5)) - 1;
  } catch (...) {
    return -1;
  }
}

}  // namespace detail

/// k-fold verification over a descriptor store and a pair list. Every image
/// needs a flipped twin row (path + "#flip") in the store; folds come from
/// the entries' fold_<j> splits.
inline EvalReport eval_verification(const DescriptorStore& store,
                                    const std::vector<PairEntry>& pairs, int q) {
  if (pairs.empty()) throw InputError("eval: empty pair list");

  std::map<std::string, int> row_of;
  for (std::size_t i = 0; i < store.entries.size(); ++i)
    row_of[store.entries[i].path] = static_cast<int>(i);

  // Physical images (flip rows attach to their source).
  std::vector<int> image_rows, flip_rows, image_fold;
  std::map<std::string, int> image_index;
  for (std::size_t i = 0; i < store.entries.size(); ++i) {
    const ManifestEntry& e = store.entries[i];
    if (!e.flip_of.empty()) continue;
    auto flip_it = row_of.find(e.path + "#flip");
    if (flip_it == row_of.end())
      throw InputError("eval: store lacks the flipped twin of " + e.path);
    image_index[e.path] = static_cast<int>(image_rows.size());
    image_rows.push_back(static_cast<int>(i));
    flip_rows.push_back(flip_it->second);
    image_fold.push_back(detail::fold_of_split(e.split));
  }

  int k = 0;
  for (const PairEntry& p : pairs) k = std::max(k, p.fold);
  if (k < 2) throw InputError("eval: pair list must span at least two folds");
  std::vector<std::vector<VerifyPair>> fold_pairs(static_cast<std::size_t>(k));
  for (const PairEntry& p : pairs) {
    auto a = image_index.find(p.path_a);
    auto b = image_index.find(p.path_b);
    if (a == image_index.end() || b == image_index.end())
      throw InputError("eval: pair references an image missing from the store");
    if (p.fold < 1) throw InputError("eval: pair fold must be >= 1");
    fold_pairs[static_cast<std::size_t>(p.fold - 1)].push_back(
        {a->second, b->second, p.same});
  }

  DescriptorSource source = [&](int i) {
    Vector d = store.rows.row(image_rows[static_cast<std::size_t>(i)]).cast<double>();
    Vector f = store.rows.row(flip_rows[static_cast<std::size_t>(i)]).cast<double>();
    return std::make_pair(std::move(d), std::move(f));
  };
  EvalReport report = kfold_verify(fold_pairs, image_fold, source, q);
  report.config_hash = store.config_hash;
  return report;
}

}  // namespace mffc
