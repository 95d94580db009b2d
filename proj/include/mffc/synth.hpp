#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mffc/errors.hpp"
#include "mffc/image.hpp"
#include "mffc/io.hpp"
#include "mffc/types.hpp"

namespace mffc {

enum class SynthTask { identification, verification };

/// Desk-scale stand-in for licensed face datasets: each synthetic "identity"
/// is a fixed mixture of oriented gratings and Gaussian blobs; samples add a
/// small integer translation and pixel noise.
struct SynthSpec {
  int classes = 20;
  int per_class = 10;
  int height = 64;
  int width = 64;
  std::uint64_t seed = 7;
  double noise_sigma = 20.0;  // additive Gaussian, on the 8-bit scale
  int max_shift = 2;          // translation in [-max_shift, max_shift]
  SynthTask task = SynthTask::identification;
  int gallery_per_class = 3;  // identification: first samples go to the gallery
  int folds = 10;             // verification
  int pairs_per_fold = 20;    // verification, half same / half not-same
  bool flips = false;         // add flipped twin entries to the manifest
};

struct SynthImage {
  std::string name;     // e.g. c07_s03.pgm
  std::string subject;  // e.g. c07
  std::string split;
  Matrix pixels;        // already quantized to 8-bit values
};

struct SynthCorpus {
  std::vector<SynthImage> images;
  std::vector<ManifestEntry> manifest;  // physical images plus flip entries
  std::vector<PairEntry> pairs;         // verification only
};

namespace detail {

struct SynthPattern {
  struct Grating {
    double amp, omega, theta, phase;
  };
  struct Blob {
    double cx, cy, sigma, amp;
  };
  std::vector<Grating> gratings;
  std::vector<Blob> blobs;

  double at(double x, double y) const {
    double v = 128.0;
    for (const auto& g : gratings)
      v += g.amp * std::sin(g.omega * (x * std::cos(g.theta) + y * std::sin(g.theta)) + g.phase);
    for (const auto& b : blobs) {
      const double dx = x - b.cx, dy = y - b.cy;
      v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
    }
    return v;
  }
};

inline SynthPattern synth_pattern(const SynthSpec& spec, int cls) {
  Rng rng(derive_seed(spec.seed, 1000 + static_cast<std::uint64_t>(cls)));
  SynthPattern p;
  for (int i = 0; i < 4; ++i) {
    SynthPattern::Grating g{};
    g.amp = rng.uniform(15.0, 35.0);
    g.omega = rng.uniform(2.0 * M_PI / 32.0, 2.0 * M_PI / 8.0);
    g.theta = rng.uniform(0.0, M_PI);
    g.phase = rng.uniform(0.0, 2.0 * M_PI);
    p.gratings.push_back(g);
  }
  for (int i = 0; i < 3; ++i) {
    SynthPattern::Blob b{};
    b.cx = rng.uniform(0.2, 0.8) * spec.width;
    b.cy = rng.uniform(0.2, 0.8) * spec.height;
    b.sigma = rng.uniform(4.0, 10.0);
    b.amp = rng.uniform(20.0, 50.0) * (rng.below(2) == 0 ? 1.0 : -1.0);
    p.blobs.push_back(b);
  }
  return p;
}

inline std::string synth_name(int cls, int sample) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%02d_s%02d.pgm", cls, sample);
  return buf;
}

}  // namespace detail

/// Deterministic synthetic corpus. Identical (spec) means identical pixels,
/// manifest, and pairs, regardless of where it is generated.
inline SynthCorpus synth_corpus(const SynthSpec& spec) {
  if (spec.classes < 2) throw ParameterError("synth: need at least two classes");
  if (spec.per_class < 1 || spec.height < 8 || spec.width < 8)
    throw ParameterError("synth: degenerate corpus shape");
  if (spec.task == SynthTask::identification &&
      (spec.gallery_per_class < 1 || spec.gallery_per_class >= spec.per_class))
    throw ParameterError("synth: gallery_per_class must leave at least one probe");
  if (spec.task == SynthTask::verification) {
    if (spec.folds < 2) throw ParameterError("synth: verification needs >= 2 folds");
    if (spec.classes < 2 * spec.folds)
      throw ParameterError("synth: need >= 2 classes per fold for not-same pairs");
    if (spec.pairs_per_fold < 2 || spec.pairs_per_fold % 2 != 0)
      throw ParameterError("synth: pairs_per_fold must be even and >= 2");
    if (spec.per_class < 2) throw ParameterError("synth: same pairs need >= 2 per class");
  }

  SynthCorpus corpus;
  for (int cls = 0; cls < spec.classes; ++cls) {
    const detail::SynthPattern pattern = detail::synth_pattern(spec, cls);
    for (int s = 0; s < spec.per_class; ++s) {
      Rng rng(derive_seed(spec.seed, (static_cast<std::uint64_t>(cls) + 1) * 1000003ull +
                                         static_cast<std::uint64_t>(s)));
      const int shift_span = 2 * spec.max_shift + 1;
      const int dx = static_cast<int>(rng.below(shift_span)) - spec.max_shift;
      const int dy = static_cast<int>(rng.below(shift_span)) - spec.max_shift;

      SynthImage img;
      img.name = detail::synth_name(cls, s);
      img.subject = img.name.substr(0, img.name.find('_'));
      if (spec.task == SynthTask::identification) {
        img.split = s < spec.gallery_per_class ? "gallery" : "probe";
      } else {
        img.split = "fold_" + std::to_string(cls % spec.folds + 1);
      }
      img.pixels.resize(spec.height, spec.width);
      for (int r = 0; r < spec.height; ++r) {
        for (int c = 0; c < spec.width; ++c) {
          double v = pattern.at(c + dx, r + dy);
          if (spec.noise_sigma > 0.0) v += spec.noise_sigma * rng.gaussian();
          v = std::min(255.0, std::max(0.0, v));
          img.pixels(r, c) = static_cast<double>(std::lround(v));
        }
      }
      corpus.manifest.push_back({img.name, img.subject, img.split, ""});
      corpus.images.push_back(std::move(img));
    }
  }

  if (spec.flips) {
    const std::size_t physical = corpus.manifest.size();
    for (std::size_t i = 0; i < physical; ++i) {
      const ManifestEntry& e = corpus.manifest[i];
      corpus.manifest.push_back({e.path + "#flip", e.subject_id, e.split, e.path});
    }
  }

  if (spec.task == SynthTask::verification) {
    for (int f = 0; f < spec.folds; ++f) {
      Rng rng(derive_seed(spec.seed, 0xabc000ull + static_cast<std::uint64_t>(f)));
      std::vector<int> fold_classes;
      for (int cls = f; cls < spec.classes; cls += spec.folds) fold_classes.push_back(cls);
      for (int t = 0; t < spec.pairs_per_fold / 2; ++t) {
        // One same pair.
        const int cls = fold_classes[rng.below(fold_classes.size())];
        const int s1 = static_cast<int>(rng.below(spec.per_class));
        int s2 = static_cast<int>(rng.below(spec.per_class - 1));
        if (s2 >= s1) ++s2;
        corpus.pairs.push_back(
            {detail::synth_name(cls, s1), detail::synth_name(cls, s2), true, f + 1});
        // One not-same pair (two distinct classes of this fold).
        const int c1i = static_cast<int>(rng.below(fold_classes.size()));
        int c2i = static_cast<int>(rng.below(fold_classes.size() - 1));
        if (c2i >= c1i) ++c2i;
        corpus.pairs.push_back(
            {detail::synth_name(fold_classes[c1i], static_cast<int>(rng.below(spec.per_class))),
             detail::synth_name(fold_classes[c2i], static_cast<int>(rng.below(spec.per_class))),
             false, f + 1});
      }
    }
  }
  return corpus;
}

/// Materialize a corpus: PGM files, manifest.csv, and pairs.csv (verification).
inline void write_corpus(const SynthCorpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& img : corpus.images)
    save_pgm((std::filesystem::path(dir) / img.name).string(), img.pixels);
  save_manifest((std::filesystem::path(dir) / "manifest.csv").string(), corpus.manifest);
  if (!corpus.pairs.empty())
    save_pairs((std::filesystem::path(dir) / "pairs.csv").string(), corpus.pairs);
}

}  // namespace mffc
