#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mffc/diversify.hpp"
#include "mffc/errors.hpp"
#include "mffc/eval.hpp"
#include "mffc/gabor.hpp"
#include "mffc/types.hpp"
#include "mffc/wpca.hpp"

namespace mffc {

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian; big-endian hosts need byte swaps");

// ---------------------------------------------------------------------------
// Ensemble container: magic "MFFC1", key=value text header, blank line, then
// a raw little-endian payload (f64 for models/filters, f32 for descriptor
// stores). Writes go to a temp name and rename on success.

namespace container {

using Header = std::map<std::string, std::string>;

inline void write(const std::string& path,
                  const std::vector<std::pair<std::string, std::string>>& header,
                  const void* payload, std::size_t bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("container: cannot write " + tmp);
    out << "MFFC1\n";
    for (const auto& [k, v] : header) {
      if (k.find_first_of("=\n") != std::string::npos ||
          v.find('\n') != std::string::npos)
        throw IoError("container: header key/value contains forbidden characters");
      out << k << "=" << v << "\n";
    }
    out << "\n";
    if (bytes > 0) out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(bytes));
    if (!out) throw IoError("container: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline Header read(const std::string& path, std::vector<unsigned char>& payload) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("container: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "MFFC1")
    throw IoError("container: " + path + " is not an ensemble container");
  Header header;
  while (std::getline(in, line)) {
    if (line.empty()) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("container: malformed header line in " + path);
    header.emplace(line.substr(0, eq), line.substr(eq + 1));
  }
  payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return header;
}

inline const std::string& need(const Header& h, const std::string& key, const std::string& path) {
  auto it = h.find(key);
  if (it == h.end()) throw IoError("container: " + path + " missing header key '" + key + "'");
  return it->second;
}

inline std::int64_t need_int(const Header& h, const std::string& key, const std::string& path) {
  try {
    return std::stoll(need(h, key, path));
  } catch (const IoError&) {
    throw;
  } catch (...) {
    throw IoError("container: " + path + " has non-numeric '" + key + "'");
  }
}

}  // namespace container

namespace detail {

inline void append_matrix_rowmajor(std::vector<double>& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
}

inline Matrix take_matrix_rowmajor(const std::vector<double>& in, std::size_t& pos,
                                   Eigen::Index rows, Eigen::Index cols,
                                   const std::string& path) {
  if (pos + static_cast<std::size_t>(rows) * cols > in.size())
    throw IoError("container: payload too short in " + path);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = in[pos++];
  return m;
}

inline std::vector<double> payload_as_f64(const std::vector<unsigned char>& bytes,
                                          const std::string& path) {
  if (bytes.size() % sizeof(double) != 0)
    throw IoError("container: payload is not a whole number of doubles in " + path);
  std::vector<double> out(bytes.size() / sizeof(double));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

inline std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

template <typename T>
inline std::vector<T> split_ints(const std::string& s, const std::string& path) {
  std::vector<T> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      out.push_back(static_cast<T>(std::stoll(item)));
    } catch (...) {
      throw IoError("container: bad integer list in " + path);
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Filter banks

inline void save_filter_bank(const std::string& path, const FilterBank& bank,
                             const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  bank.validate();
  std::vector<std::pair<std::string, std::string>> header{
      {"type", "filter_bank"},
      {"kind", to_string(bank.kind)},
      {"support", std::to_string(bank.support())},
      {"count", std::to_string(bank.size())},
  };
  header.insert(header.end(), extra.begin(), extra.end());
  std::vector<double> payload;
  payload.reserve(2 * bank.size() * static_cast<std::size_t>(bank.support()) * bank.support());
  for (const auto& f : bank.filters) {
    detail::append_matrix_rowmajor(payload, f.re);
    detail::append_matrix_rowmajor(payload, f.im);
  }
  container::write(path, header, payload.data(), payload.size() * sizeof(double));
}

inline FilterBank load_filter_bank(const std::string& path) {
  std::vector<unsigned char> bytes;
  container::Header h = container::read(path, bytes);
  if (container::need(h, "type", path) != "filter_bank")
    throw IoError("container: " + path + " is not a filter bank");
  const int k = static_cast<int>(container::need_int(h, "support", path));
  const auto count = static_cast<std::size_t>(container::need_int(h, "count", path));
  std::vector<double> payload = detail::payload_as_f64(bytes, path);

  FilterBank bank;
  bank.kind = bank_kind_from_string(container::need(h, "kind", path));
  std::size_t pos = 0;
  bank.filters.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Matrix re = detail::take_matrix_rowmajor(payload, pos, k, k, path);
    Matrix im = detail::take_matrix_rowmajor(payload, pos, k, k, path);
    bank.filters.emplace_back(std::move(re), std::move(im));
  }
  if (pos != payload.size()) throw IoError("container: trailing payload in " + path);
  return bank;
}

// ---------------------------------------------------------------------------
// Offspring sets

inline void save_offspring(const std::string& path, const OffspringSet& set,
                           const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  if (set.filters.empty()) throw ContractError("save_offspring: empty set");
  std::vector<std::pair<std::string, std::string>> header{
      {"type", "offspring_set"},
      {"kind", to_string(set.kind)},
      {"side", std::to_string(set.offspring_side)},
      {"fold_sizes", detail::join_ints(set.fold_sizes)},
      {"self_cross", set.self_cross ? "1" : "0"},
      {"unique", std::to_string(set.unique_count())},
  };
  if (set.deduplicated()) {
    std::ostringstream os;
    for (std::size_t i = 0; i < set.dedup.size(); ++i) os << (i ? "," : "") << set.dedup[i];
    header.emplace_back("dedup", os.str());
  }
  header.insert(header.end(), extra.begin(), extra.end());

  std::vector<double> payload;
  for (const auto& f : set.filters) {
    detail::append_matrix_rowmajor(payload, f.re);
    detail::append_matrix_rowmajor(payload, f.im);
  }
  container::write(path, header, payload.data(), payload.size() * sizeof(double));
}

inline OffspringSet load_offspring(const std::string& path) {
  std::vector<unsigned char> bytes;
  container::Header h = container::read(path, bytes);
  if (container::need(h, "type", path) != "offspring_set")
    throw IoError("container: " + path + " is not an offspring set");

  OffspringSet set;
  set.kind = offspring_kind_from_string(container::need(h, "kind", path));
  set.offspring_side = static_cast<int>(container::need_int(h, "side", path));
  set.fold_sizes = detail::split_ints<int>(container::need(h, "fold_sizes", path), path);
  set.self_cross = container::need(h, "self_cross", path) == "1";
  const auto unique = static_cast<std::size_t>(container::need_int(h, "unique", path));
  if (auto it = h.find("dedup"); it != h.end())
    set.dedup = detail::split_ints<std::int32_t>(it->second, path);

  std::vector<double> payload = detail::payload_as_f64(bytes, path);
  std::size_t pos = 0;
  const int side = set.offspring_side;
  set.filters.reserve(unique);
  for (std::size_t i = 0; i < unique; ++i) {
    Matrix re = detail::take_matrix_rowmajor(payload, pos, side, side, path);
    Matrix im = detail::take_matrix_rowmajor(payload, pos, side, side, path);
    set.filters.emplace_back(std::move(re), std::move(im));
  }
  if (pos != payload.size()) throw IoError("container: trailing payload in " + path);
  if (set.deduplicated() &&
      set.dedup.size() != static_cast<std::size_t>(set.logical_count()))
    throw IoError("container: dedup map length mismatch in " + path);
  return set;
}

// ---------------------------------------------------------------------------
// WPCA models

inline void save_wpca(const std::string& path, const WpcaModel& model,
                      const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::vector<std::pair<std::string, std::string>> header{
      {"type", "wpca"},
      {"dim_in", std::to_string(model.dim_in())},
      {"dim_out", std::to_string(model.dim_out())},
      {"requested", std::to_string(model.requested_dim)},
      {"reduced", model.reduced ? "1" : "0"},
  };
  header.insert(header.end(), extra.begin(), extra.end());
  std::vector<double> payload;
  payload.reserve(static_cast<std::size_t>(model.dim_in()) * (model.dim_out() + 1) +
                  model.dim_out());
  for (Eigen::Index i = 0; i < model.mean.size(); ++i) payload.push_back(model.mean(i));
  for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i)
    payload.push_back(model.eigenvalues(i));
  detail::append_matrix_rowmajor(payload, model.projection);
  container::write(path, header, payload.data(), payload.size() * sizeof(double));
}

inline WpcaModel load_wpca(const std::string& path) {
  std::vector<unsigned char> bytes;
  container::Header h = container::read(path, bytes);
  if (container::need(h, "type", path) != "wpca")
    throw IoError("container: " + path + " is not a wpca model");
  const auto d = static_cast<Eigen::Index>(container::need_int(h, "dim_in", path));
  const auto q = static_cast<Eigen::Index>(container::need_int(h, "dim_out", path));
  std::vector<double> payload = detail::payload_as_f64(bytes, path);

  WpcaModel model;
  model.requested_dim = static_cast<int>(container::need_int(h, "requested", path));
  model.reduced = container::need(h, "reduced", path) == "1";
  std::size_t pos = 0;
  Matrix mean = detail::take_matrix_rowmajor(payload, pos, 1, d, path);
  model.mean = mean.row(0).transpose();
  Matrix evals = detail::take_matrix_rowmajor(payload, pos, 1, q, path);
  model.eigenvalues = evals.row(0).transpose();
  model.projection = detail::take_matrix_rowmajor(payload, pos, q, d, path);
  if (pos != payload.size()) throw IoError("container: trailing payload in " + path);
  return model;
}

// ---------------------------------------------------------------------------
// Dataset manifests: UTF-8 CSV, header path,subject_id,split[,flip_of].
// An entry with flip_of=P is the horizontal mirror of image P; its path is a
// key, not a file.

struct ManifestEntry {
  std::string path;
  std::string subject_id;
  std::string split;
  std::string flip_of;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("manifest: cannot write " + tmp);
    out << "path,subject_id,split,flip_of\n";
    for (const auto& e : entries)
      out << e.path << "," << e.subject_id << "," << e.split << "," << e.flip_of << "\n";
    if (!out) throw IoError("manifest: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("manifest: empty file " + path);
  std::vector<std::string> head = detail::split_csv_line(line);
  if (head.size() < 3 || head[0] != "path" || head[1] != "subject_id" || head[2] != "split")
    throw IoError("manifest: bad header in " + path);

  std::vector<ManifestEntry> entries;
  std::map<std::string, bool> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols = detail::split_csv_line(line);
    if (cols.size() != head.size())
      throw IoError("manifest: wrong column count in " + path + ": " + line);
    ManifestEntry e;
    e.path = cols[0];
    e.subject_id = cols[1];
    e.split = cols[2];
    if (cols.size() > 3) e.flip_of = cols[3];
    if (seen[e.path]) throw IoError("manifest: duplicate path " + e.path);
    seen[e.path] = true;
    entries.push_back(std::move(e));
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Verification pair lists: CSV path_a,path_b,same,fold (fold 1-based).

struct PairEntry {
  std::string path_a;
  std::string path_b;
  bool same = false;
  int fold = 1;
};

inline void save_pairs(const std::string& path, const std::vector<PairEntry>& pairs) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("pairs: cannot write " + tmp);
    out << "path_a,path_b,same,fold\n";
    for (const auto& p : pairs)
      out << p.path_a << "," << p.path_b << "," << (p.same ? 1 : 0) << "," << p.fold << "\n";
    if (!out) throw IoError("pairs: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<PairEntry> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("pairs: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      detail::split_csv_line(line) !=
          std::vector<std::string>{"path_a", "path_b", "same", "fold"})
    throw IoError("pairs: bad header in " + path);
  std::vector<PairEntry> pairs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols = detail::split_csv_line(line);
    if (cols.size() != 4) throw IoError("pairs: wrong column count in " + path);
    PairEntry p;
    p.path_a = cols[0];
    p.path_b = cols[1];
    p.same = cols[2] == "1";
    try {
      p.fold = std::stoi(cols[3]);
    } catch (...) {
      throw IoError("pairs: bad fold in " + path);
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Descriptor stores: f32 rows plus a labels sidecar (<path>.labels.csv)
// mirroring the manifest rows in store order.

struct DescriptorStore {
  MatrixF rows;  // n x d
  std::string config_hash;
  std::vector<ManifestEntry> entries;  // aligned with rows
};

inline void save_store(const std::string& path, const DescriptorStore& store) {
  if (store.rows.rows() != static_cast<Eigen::Index>(store.entries.size()))
    throw ContractError("store: entries do not match rows");
  std::vector<std::pair<std::string, std::string>> header{
      {"type", "descriptor_store"},
      {"dtype", "f32"},
      {"count", std::to_string(store.rows.rows())},
      {"dim", std::to_string(store.rows.cols())},
      {"config_hash", store.config_hash},
  };
  std::vector<float> payload;
  payload.reserve(static_cast<std::size_t>(store.rows.size()));
  for (Eigen::Index r = 0; r < store.rows.rows(); ++r)
    for (Eigen::Index c = 0; c < store.rows.cols(); ++c) payload.push_back(store.rows(r, c));
  container::write(path, header, payload.data(), payload.size() * sizeof(float));
  save_manifest(path + ".labels.csv", store.entries);
}

inline DescriptorStore load_store(const std::string& path) {
  std::vector<unsigned char> bytes;
  container::Header h = container::read(path, bytes);
  if (container::need(h, "type", path) != "descriptor_store")
    throw IoError("container: " + path + " is not a descriptor store");
  if (container::need(h, "dtype", path) != "f32")
    throw IoError("container: unsupported store dtype in " + path);
  const auto n = static_cast<Eigen::Index>(container::need_int(h, "count", path));
  const auto d = static_cast<Eigen::Index>(container::need_int(h, "dim", path));
  if (bytes.size() != static_cast<std::size_t>(n) * d * sizeof(float))
    throw IoError("container: store payload size mismatch in " + path);

  DescriptorStore store;
  store.config_hash = container::need(h, "config_hash", path);
  store.rows.resize(n, d);
  const float* p = reinterpret_cast<const float*>(bytes.data());
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) store.rows(r, c) = *p++;
  store.entries = load_manifest(path + ".labels.csv");
  if (store.entries.size() != static_cast<std::size_t>(n))
    throw IoError("store: labels sidecar does not match row count for " + path);
  return store;
}

// ---------------------------------------------------------------------------
// Evaluation report emission

inline std::string report_to_text(const EvalReport& report) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "task="
     << (report.task == EvalTask::identification ? "identification" : "verification") << "\n";
  os << "config_hash=" << report.config_hash << "\n";
  if (report.rank1) os << "rank1_percent=" << *report.rank1 << "\n";
  if (report.auc) os << "auc_percent=" << *report.auc << "\n";
  if (report.acc_mean) os << "acc_mean_percent=" << *report.acc_mean << "\n";
  if (report.acc_sd) os << "acc_sd_percent=" << *report.acc_sd << "\n";
  if (!report.per_fold.empty()) os << "folds=" << report.per_fold.size() << "\n";
  for (const auto& note : report.notes) os << "note=" << note << "\n";
  return os.str();
}

/// Writes <prefix>.txt, and for verification <prefix>_folds.csv and
/// <prefix>_roc.csv for external plotting.
inline void save_report(const std::string& prefix, const EvalReport& report) {
  {
    std::ofstream out(prefix + ".txt", std::ios::trunc);
    if (!out) throw IoError("report: cannot write " + prefix + ".txt");
    out << report_to_text(report);
  }
  if (!report.per_fold.empty()) {
    std::ofstream out(prefix + "_folds.csv", std::ios::trunc);
    if (!out) throw IoError("report: cannot write " + prefix + "_folds.csv");
    out << "fold,auc,acc,n_pairs\n";
    out.setf(std::ios::fixed);
    out.precision(4);
    for (const auto& f : report.per_fold)
      out << f.fold << "," << f.auc_percent << "," << f.acc_percent << "," << f.n_pairs << "\n";
  }
  if (!report.roc.empty()) {
    std::ofstream out(prefix + "_roc.csv", std::ios::trunc);
    if (!out) throw IoError("report: cannot write " + prefix + "_roc.csv");
    out << "threshold,fpr,tpr\n";
    for (const auto& p : report.roc) {
      out << p.threshold << "," << p.fpr << "," << p.tpr << "\n";
    }
  }
}

}  // namespace mffc
