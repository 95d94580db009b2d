#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mffc/conv.hpp"
#include "mffc/diversify.hpp"
#include "mffc/errors.hpp"
#include "mffc/gabor.hpp"
#include "mffc/pooling.hpp"

namespace mffc {

enum class DescriptorKind { gabor, gabor_pca, gabor_ica };

inline const char* to_string(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::gabor: return "gabor";
    case DescriptorKind::gabor_pca: return "gabor_pca";
    case DescriptorKind::gabor_ica: return "gabor_ica";
  }
  return "?";
}

inline DescriptorKind descriptor_kind_from_string(std::string s) {
  for (char& ch : s)
    if (ch == '-') ch = '_';
  if (s == "gabor") return DescriptorKind::gabor;
  if (s == "gabor_pca") return DescriptorKind::gabor_pca;
  if (s == "gabor_ica") return DescriptorKind::gabor_ica;
  throw InputError("unknown descriptor kind: " + s);
}

inline const char* to_string(ConvBackend b) {
  switch (b) {
    case ConvBackend::direct: return "direct";
    case ConvBackend::fft: return "fft";
    case ConvBackend::auto_: return "auto";
  }
  return "?";
}

inline ConvBackend backend_from_string(const std::string& s) {
  if (s == "direct") return ConvBackend::direct;
  if (s == "fft") return ConvBackend::fft;
  if (s == "auto") return ConvBackend::auto_;
  throw InputError("unknown convolution backend: " + s);
}

/// Everything the pipeline needs, overridable per key from config files and
/// CLI flags. backend/fft_crossover/threads choose execution strategy only
/// and never change results, so they stay outside the config hash.
struct PipelineConfig {
  GaborParams gabor;
  DescriptorKind kind = DescriptorKind::gabor;
  int folds = 2;  // M
  int grid_rows = 8;
  int grid_cols = 8;
  double overlap_ratio = 0.0;
  PoolSpec pool;
  int wpca_dim = 1000;
  std::int64_t patch_count = 500000;
  int learned_filters = 8;
  std::uint64_t seed = 0;
  ConvBackend backend = ConvBackend::auto_;
  std::size_t fft_crossover = kDefaultFftCrossover;
  int threads = 0;  // 0 = MFFC_THREADS env var, else 1
};

/// Named parameter presets for the evaluation protocols.
inline PipelineConfig preset(const std::string& name) {
  PipelineConfig c;
  if (name == "feret1") {
    c.gabor.support = 7;
    c.grid_rows = c.grid_cols = 8;
    c.overlap_ratio = 0.0;
    c.wpca_dim = 1000;
  } else if (name == "feret2") {
    c.gabor.support = 9;
    c.grid_rows = c.grid_cols = 8;
    c.overlap_ratio = 0.5;
    c.wpca_dim = 300;
  } else if (name == "ar") {
    c.gabor.support = 9;
    c.grid_rows = c.grid_cols = 8;
    c.overlap_ratio = 0.0;
    c.wpca_dim = 180;
  } else if (name == "lfw_a") {
    c.gabor.support = 9;
    c.grid_rows = 10;
    c.grid_cols = 6;
    c.overlap_ratio = 0.5;
    c.wpca_dim = 2000;
  } else if (name == "lfw_hpen") {
    c.gabor.support = 9;
    c.grid_rows = 11;
    c.grid_cols = 8;
    c.overlap_ratio = 0.5;
    c.pool.window = 4;
    c.pool.stride = 4;
    c.wpca_dim = 2000;
  } else if (name == "ytf") {
    c.gabor.support = 9;
    c.grid_rows = 8;
    c.grid_cols = 6;
    c.overlap_ratio = 0.5;
    c.wpca_dim = 2000;
  } else {
    throw InputError("unknown preset: " + name);
  }
  return c;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw 0;
    return x;
  } catch (...) {
    throw InputError("config: bad number for " + key + ": '" + v + "'");
  }
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw 0;
    return x;
  } catch (...) {
    throw InputError("config: bad integer for " + key + ": '" + v + "'");
  }
}

}  // namespace detail

/// Apply one key=value override.
inline void set_config_key(PipelineConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  if (key == "sigma") c.gabor.sigma = parse_double(key, value);
  else if (key == "k_max") c.gabor.k_max = parse_double(key, value);
  else if (key == "f") c.gabor.f = parse_double(key, value);
  else if (key == "u_max") c.gabor.u_max = static_cast<int>(parse_int(key, value));
  else if (key == "v_max") c.gabor.v_max = static_cast<int>(parse_int(key, value));
  else if (key == "support") c.gabor.support = static_cast<int>(parse_int(key, value));
  else if (key == "kind") c.kind = descriptor_kind_from_string(value);
  else if (key == "folds") c.folds = static_cast<int>(parse_int(key, value));
  else if (key == "grid_rows") c.grid_rows = static_cast<int>(parse_int(key, value));
  else if (key == "grid_cols") c.grid_cols = static_cast<int>(parse_int(key, value));
  else if (key == "overlap") c.overlap_ratio = parse_double(key, value);
  else if (key == "pool_window") c.pool.window = static_cast<int>(parse_int(key, value));
  else if (key == "pool_stride") c.pool.stride = static_cast<int>(parse_int(key, value));
  else if (key == "pool_mode") c.pool.mode = pool_mode_from_string(value);
  else if (key == "wpca_dim") c.wpca_dim = static_cast<int>(parse_int(key, value));
  else if (key == "patch_count") c.patch_count = parse_int(key, value);
  else if (key == "learned_filters") c.learned_filters = static_cast<int>(parse_int(key, value));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "backend") c.backend = backend_from_string(value);
  else if (key == "fft_crossover") c.fft_crossover = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "threads") c.threads = static_cast<int>(parse_int(key, value));
  else throw InputError("config: unknown key '" + key + "'");
}

/// key=value lines; '#' starts a comment.
inline void load_config_file(PipelineConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    const auto eq = line.find('=', start);
    if (eq == std::string::npos)
      throw InputError("config: line " + std::to_string(lineno) + " of " + path +
                       " is not key=value");
    set_config_key(c, line.substr(start, eq - start), line.substr(eq + 1));
  }
}

/// Canonical descriptor-relevant serialization (execution knobs excluded).
inline std::string serialize_config(const PipelineConfig& c) {
  std::ostringstream os;
  os << "sigma=" << detail::fmt_double(c.gabor.sigma) << "\n"
     << "k_max=" << detail::fmt_double(c.gabor.k_max) << "\n"
     << "f=" << detail::fmt_double(c.gabor.f) << "\n"
     << "u_max=" << c.gabor.u_max << "\n"
     << "v_max=" << c.gabor.v_max << "\n"
     << "support=" << c.gabor.support << "\n"
     << "kind=" << to_string(c.kind) << "\n"
     << "folds=" << c.folds << "\n"
     << "grid_rows=" << c.grid_rows << "\n"
     << "grid_cols=" << c.grid_cols << "\n"
     << "overlap=" << detail::fmt_double(c.overlap_ratio) << "\n"
     << "pool_window=" << c.pool.window << "\n"
     << "pool_stride=" << c.pool.stride << "\n"
     << "pool_mode=" << to_string(c.pool.mode) << "\n"
     << "wpca_dim=" << c.wpca_dim << "\n"
     << "patch_count=" << c.patch_count << "\n"
     << "learned_filters=" << c.learned_filters << "\n"
     << "seed=" << c.seed << "\n";
  return os.str();
}

/// FNV-1a 64 over the canonical serialization, as a fixed-width hex string.
inline std::string config_hash(const PipelineConfig& c) {
  const std::string s = serialize_config(c);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mffc
