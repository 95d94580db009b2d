// Command-line front end: learn filters, build offspring sets, extract
// descriptors, fit WPCA, and evaluate identification/verification protocols.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "mffc/mffc.hpp"

namespace {

/// Flags shared by commands that need a pipeline configuration. Application
/// order: preset, config file, then any explicit flags.
struct ConfigArgs {
  std::string preset_name;
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
  std::string kind;
  std::string backend;
  std::int64_t folds = -1;
  std::int64_t seed = -1;
  std::int64_t threads = -1;
  std::int64_t support = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset_name,
                    "named preset (feret1 feret2 ar lfw_a lfw_hpen ytf)");
    cmd->add_option("--config", config_file, "key=value config file");
    cmd->add_option("--set", overrides, "extra key=value override (repeatable)");
    cmd->add_option("--kind", kind, "descriptor kind: gabor | gabor-pca | gabor-ica");
    cmd->add_option("--folds", folds, "M, number of convolution folds");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--backend", backend, "convolution backend: direct | fft | auto");
    cmd->add_option("--threads", threads, "worker threads (0 = MFFC_THREADS env)");
    cmd->add_option("--support", support, "filter side length k (odd)");
  }

  mffc::PipelineConfig build() const {
    mffc::PipelineConfig cfg;
    if (!preset_name.empty()) cfg = mffc::preset(preset_name);
    if (!config_file.empty()) mffc::load_config_file(cfg, config_file);
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw mffc::InputError("--set expects key=value, got '" + kv + "'");
      mffc::set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!kind.empty()) cfg.kind = mffc::descriptor_kind_from_string(kind);
    if (!backend.empty()) cfg.backend = mffc::backend_from_string(backend);
    if (folds >= 0) cfg.folds = static_cast<int>(folds);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads >= 0) cfg.threads = static_cast<int>(threads);
    if (support >= 0) cfg.gabor.support = static_cast<int>(support);
    return cfg;
  }
};

std::vector<mffc::ManifestEntry> physical_entries(const std::vector<mffc::ManifestEntry>& all,
                                                  const std::string& split) {
  std::vector<mffc::ManifestEntry> out;
  for (const auto& e : all) {
    if (!e.flip_of.empty()) continue;
    if (!split.empty() && split != "all" && e.split != split) continue;
    out.push_back(e);
  }
  return out;
}

int cmd_synth_corpus(const std::string& out_dir, const std::string& task, int classes,
                     int per_class, int height, int width, std::int64_t seed, double noise,
                     int gallery_per_class, int folds, int pairs_per_fold, bool flips) {
  mffc::SynthSpec spec;
  spec.classes = classes;
  spec.per_class = per_class;
  spec.height = height;
  spec.width = width;
  spec.seed = static_cast<std::uint64_t>(seed);
  spec.noise_sigma = noise;
  spec.gallery_per_class = gallery_per_class;
  spec.folds = folds;
  spec.pairs_per_fold = pairs_per_fold;
  spec.flips = flips;
  if (task == "ident") spec.task = mffc::SynthTask::identification;
  else if (task == "verify") {
    spec.task = mffc::SynthTask::verification;
    spec.flips = true;  // verification scoring needs the flipped twins
  } else throw mffc::InputError("synth-corpus: task must be ident or verify");

  mffc::SynthCorpus corpus = mffc::synth_corpus(spec);
  mffc::write_corpus(corpus, out_dir);
  std::cout << "synth-corpus: wrote " << corpus.images.size() << " images ("
            << corpus.manifest.size() << " manifest entries";
  if (!corpus.pairs.empty()) std::cout << ", " << corpus.pairs.size() << " pairs";
  std::cout << ") to " << out_dir << "\n";
  return 0;
}

int cmd_learn_filters(const ConfigArgs& cargs, const std::string& manifest_path,
                      const std::string& bank_kind, const std::string& split,
                      const std::string& out_path) {
  mffc::PipelineConfig cfg = cargs.build();
  const mffc::BankKind kind = mffc::bank_kind_from_string(bank_kind);

  const std::string root = std::filesystem::path(manifest_path).parent_path().string();
  std::vector<mffc::ManifestEntry> entries =
      physical_entries(mffc::load_manifest(manifest_path), split);
  if (entries.empty()) throw mffc::InputError("learn-filters: no images selected");
  mffc::ManifestImageLoader loader(root, entries);
  std::vector<mffc::Matrix> images;
  images.reserve(static_cast<std::size_t>(loader.count()));
  for (int i = 0; i < loader.count(); ++i) images.push_back(loader(i));

  mffc::FilterBank bank = mffc::learn_bank(images, cfg, kind);
  mffc::save_filter_bank(out_path, bank,
                         {{"seed", std::to_string(cfg.seed)},
                          {"patch_count", std::to_string(cfg.patch_count)}});
  std::cout << "learn-filters: " << bank.size() << " " << mffc::to_string(kind)
            << " filters of " << bank.support() << "x" << bank.support() << " -> " << out_path
            << "\n";
  return 0;
}

int cmd_make_offspring(const ConfigArgs& cargs, const std::string& learned_path,
                       const std::string& out_prefix) {
  mffc::PipelineConfig cfg = cargs.build();
  mffc::FilterBank learned;
  const mffc::FilterBank* learned_ptr = nullptr;
  if (!learned_path.empty()) {
    learned = mffc::load_filter_bank(learned_path);
    learned_ptr = &learned;
  }
  mffc::OffspringPair pair = mffc::build_offspring(cfg, learned_ptr);
  const std::string hash = mffc::config_hash(cfg);
  mffc::save_offspring(out_prefix + "_re.mffc", pair.re, {{"config_hash", hash}});
  mffc::save_offspring(out_prefix + "_im.mffc", pair.im, {{"config_hash", hash}});
  std::cout << "make-offspring: " << pair.re.unique_count() << " unique / "
            << pair.re.logical_count() << " logical offspring per part, side "
            << pair.re.offspring_side << " -> " << out_prefix << "_{re,im}.mffc\n";
  return 0;
}

int cmd_describe(const ConfigArgs& cargs, const std::string& manifest_path,
                 const std::string& offspring_prefix, const std::string& out_path) {
  mffc::PipelineConfig cfg = cargs.build();
  mffc::OffspringPair pair;
  pair.re = mffc::load_offspring(offspring_prefix + "_re.mffc");
  pair.im = mffc::load_offspring(offspring_prefix + "_im.mffc");

  const std::string root = std::filesystem::path(manifest_path).parent_path().string();
  std::vector<mffc::ManifestEntry> entries = mffc::load_manifest(manifest_path);
  if (entries.empty()) throw mffc::InputError("describe: empty manifest");
  mffc::ManifestImageLoader loader(root, entries);

  mffc::DescriptorStore store;
  store.rows = mffc::batch_descriptors(
      loader.count(), [&](int i) { return loader(i); }, pair, cfg);
  store.config_hash = mffc::config_hash(cfg);
  store.entries = entries;
  mffc::save_store(out_path, store);
  std::cout << "describe: " << store.rows.rows() << " descriptors of dim "
            << store.rows.cols() << " -> " << out_path << "\n";
  return 0;
}

int cmd_fit_wpca(const std::string& store_path, const std::string& split, int q,
                 const std::string& out_path) {
  mffc::DescriptorStore store = mffc::load_store(store_path);
  std::vector<int> rows;
  for (std::size_t i = 0; i < store.entries.size(); ++i)
    if (split.empty() || split == "all" || store.entries[i].split == split)
      rows.push_back(static_cast<int>(i));
  if (rows.size() < 2) throw mffc::InputError("fit-wpca: not enough training rows");

  mffc::Matrix train(rows.size(), store.rows.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    train.row(i) = store.rows.row(rows[i]).cast<double>();
  mffc::WpcaModel model = mffc::fit_wpca(train, q);
  mffc::save_wpca(out_path, model, {{"config_hash", store.config_hash}});
  std::cout << "fit-wpca: " << model.dim_out() << " of " << q << " requested dims from "
            << rows.size() << " rows -> " << out_path
            << (model.reduced ? " (reduced by eigenvalue floor)" : "") << "\n";
  return 0;
}

int cmd_eval_ident(const std::string& store_path, int q, const std::string& out_prefix) {
  mffc::DescriptorStore store = mffc::load_store(store_path);
  mffc::EvalReport report = mffc::eval_identification(store, q);
  mffc::save_report(out_prefix, report);
  std::cout << mffc::report_to_text(report);
  return 0;
}

int cmd_eval_verify(const std::string& store_path, const std::string& pairs_path, int q,
                    const std::string& out_prefix) {
  mffc::DescriptorStore store = mffc::load_store(store_path);
  std::vector<mffc::PairEntry> pairs = mffc::load_pairs(pairs_path);
  mffc::EvalReport report = mffc::eval_verification(store, pairs, q);
  mffc::save_report(out_prefix, report);
  std::cout << mffc::report_to_text(report);
  return 0;
}

int cmd_bench_conv(const std::vector<int>& sizes, const std::vector<int>& kernels, int reps) {
  using clock = std::chrono::steady_clock;
  std::cout << "image,kernel,backend,ms_per_conv,max_rel_diff\n";
  for (int n : sizes) {
    for (int k : kernels) {
      if (k % 2 == 0 || k > n) continue;
      mffc::Rng rng(42);
      mffc::Matrix img(n, n), ker(k, k);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) img(r, c) = rng.uniform(0.0, 255.0);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) ker(r, c) = rng.uniform(-1.0, 1.0);

      mffc::Matrix ref;
      for (mffc::ConvBackend backend : {mffc::ConvBackend::direct, mffc::ConvBackend::fft}) {
        mffc::SameConvolver plan(img, k, backend);
        mffc::Matrix out;
        const auto t0 = clock::now();
        for (int r = 0; r < reps; ++r) out = plan.apply(ker);
        const auto t1 = clock::now();
        const double ms =
            std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
        double rel = 0.0;
        if (backend == mffc::ConvBackend::direct) ref = out;
        else
          rel = ((out - ref).cwiseAbs().maxCoeff()) /
                std::max(1e-300, ref.cwiseAbs().maxCoeff());
        std::cout << n << "," << k << ","
                  << (backend == mffc::ConvBackend::direct ? "direct" : "fft") << "," << ms
                  << "," << rel << "\n";
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M-fold filter-convolution face descriptor pipeline"};
  app.require_subcommand(1);

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus", "generate a deterministic synthetic corpus");
  std::string synth_out, synth_task = "ident";
  int synth_classes = 20, synth_per_class = 10, synth_h = 64, synth_w = 64;
  std::int64_t synth_seed = 7;
  double synth_noise = 20.0;
  int synth_gallery = 3, synth_folds = 10, synth_ppf = 20;
  bool synth_flips = false;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--task", synth_task, "ident | verify");
  synth->add_option("--classes", synth_classes, "identity count");
  synth->add_option("--per-class", synth_per_class, "images per identity");
  synth->add_option("--height", synth_h, "image height");
  synth->add_option("--width", synth_w, "image width");
  synth->add_option("--seed", synth_seed, "corpus seed");
  synth->add_option("--noise", synth_noise, "Gaussian noise sigma (8-bit scale)");
  synth->add_option("--gallery-per-class", synth_gallery, "gallery images per identity");
  synth->add_option("--folds", synth_folds, "verification folds");
  synth->add_option("--pairs-per-fold", synth_ppf, "pairs per fold (even)");
  synth->add_flag("--flips", synth_flips, "add flipped twin manifest entries");

  // learn-filters
  auto* learn = app.add_subcommand("learn-filters", "learn a PCA or ICA filter bank");
  ConfigArgs learn_cfg;
  learn_cfg.attach(learn);
  std::string learn_manifest, learn_kind = "pca", learn_split = "all", learn_out;
  learn->add_option("--manifest", learn_manifest, "dataset manifest CSV")->required();
  learn->add_option("--bank", learn_kind, "pca | ica");
  learn->add_option("--split", learn_split, "manifest split to sample from (default all)");
  learn->add_option("--out", learn_out, "output filter bank file")->required();

  // make-offspring
  auto* make = app.add_subcommand("make-offspring", "build the offspring filter pair");
  ConfigArgs make_cfg;
  make_cfg.attach(make);
  std::string make_learned, make_out;
  make->add_option("--learned", make_learned, "learned bank file (gabor-pca / gabor-ica)");
  make->add_option("--out", make_out, "output prefix (_re.mffc and _im.mffc)")->required();

  // describe
  auto* describe = app.add_subcommand("describe", "extract descriptors for a manifest");
  ConfigArgs describe_cfg;
  describe_cfg.attach(describe);
  std::string desc_manifest, desc_offspring, desc_out;
  describe->add_option("--manifest", desc_manifest, "dataset manifest CSV")->required();
  describe->add_option("--offspring", desc_offspring, "offspring prefix from make-offspring")
      ->required();
  describe->add_option("--out", desc_out, "output descriptor store")->required();

  // fit-wpca
  auto* fitw = app.add_subcommand("fit-wpca", "fit a WPCA model from a descriptor store");
  std::string fitw_store, fitw_split = "all", fitw_out;
  int fitw_dim = 1000;
  fitw->add_option("--store", fitw_store, "descriptor store")->required();
  fitw->add_option("--split", fitw_split, "training split (default all)");
  fitw->add_option("--dim", fitw_dim, "target dimensions q");
  fitw->add_option("--out", fitw_out, "output model file")->required();

  // eval-ident
  auto* ident = app.add_subcommand("eval-ident", "rank-1 identification protocol");
  std::string ident_store, ident_out;
  int ident_dim = 1000;
  ident->add_option("--store", ident_store, "descriptor store")->required();
  ident->add_option("--dim", ident_dim, "WPCA dimensions q");
  ident->add_option("--out", ident_out, "report prefix")->required();

  // eval-verify
  auto* verify = app.add_subcommand("eval-verify", "k-fold verification protocol");
  std::string verify_store, verify_pairs, verify_out;
  int verify_dim = 1000;
  verify->add_option("--store", verify_store, "descriptor store")->required();
  verify->add_option("--pairs", verify_pairs, "pair list CSV")->required();
  verify->add_option("--dim", verify_dim, "WPCA dimensions q");
  verify->add_option("--out", verify_out, "report prefix")->required();

  // bench-conv
  auto* bench = app.add_subcommand("bench-conv", "time direct vs FFT convolution");
  std::vector<int> bench_sizes{64, 128, 256};
  std::vector<int> bench_kernels{7, 13, 17, 25};
  int bench_reps = 3;
  bench->add_option("--sizes", bench_sizes, "square image sides");
  bench->add_option("--kernels", bench_kernels, "kernel sides (odd)");
  bench->add_option("--reps", bench_reps, "repetitions per cell");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth_corpus(synth_out, synth_task, synth_classes, synth_per_class, synth_h,
                              synth_w, synth_seed, synth_noise, synth_gallery, synth_folds,
                              synth_ppf, synth_flips);
    if (learn->parsed())
      return cmd_learn_filters(learn_cfg, learn_manifest, learn_kind, learn_split, learn_out);
    if (make->parsed()) return cmd_make_offspring(make_cfg, make_learned, make_out);
    if (describe->parsed())
      return cmd_describe(describe_cfg, desc_manifest, desc_offspring, desc_out);
    if (fitw->parsed()) return cmd_fit_wpca(fitw_store, fitw_split, fitw_dim, fitw_out);
    if (ident->parsed()) return cmd_eval_ident(ident_store, ident_dim, ident_out);
    if (verify->parsed())
      return cmd_eval_verify(verify_store, verify_pairs, verify_dim, verify_out);
    if (bench->parsed()) return cmd_bench_conv(bench_sizes, bench_kernels, bench_reps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
