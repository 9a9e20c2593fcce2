// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// The exemplar pool: ingestion of (source, target) datasets, binary
// embedding files, length statistics, manifest persistence and seeded
// length-targeted sampling.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dlmmr/common.hpp"
#include "dlmmr/text.hpp"

namespace dlmmr {

using RecordId = std::size_t;

struct ExemplarRecord {
  RecordId id = 0;
  std::string source;
  std::string target;
  std::size_t src_len = 0;
  std::size_t tgt_len = 0;
  double cr = 0.0;  // tgt_len / src_len, never re-rounded
  std::vector<float> embedding;

  double length(LengthMode mode) const {
    switch (mode) {
      case LengthMode::kTgtWords: return static_cast<double>(tgt_len);
      case LengthMode::kSrcWords: return static_cast<double>(src_len);
      case LengthMode::kCr: return cr;
    }
    return 0.0;
  }

  friend bool operator==(const ExemplarRecord&, const ExemplarRecord&) = default;
};

// Builds a record with lengths computed from the text. Throws on an
// empty source because the compression ratio is undefined there.
inline ExemplarRecord make_record(RecordId id, std::string source,
                                  std::string target) {
  ExemplarRecord r;
  r.id = id;
  r.src_len = word_count(source);
  r.tgt_len = word_count(target);
  if (r.src_len == 0) {
    throw InputError("record " + std::to_string(id) +
                     ": source has no words (compression ratio undefined)");
  }
  r.cr = static_cast<double>(r.tgt_len) / static_cast<double>(r.src_len);
  r.source = std::move(source);
  r.target = std::move(target);
  return r;
}

struct LengthRange {
  double min = 0.0;
  double max = 0.0;
  double span() const { return max - min; }
  friend bool operator==(const LengthRange&, const LengthRange&) = default;
};

inline std::size_t mode_index(LengthMode mode) {
  return static_cast<std::size_t>(mode);
}

class PoolBuilder;

// Frozen, indexed collection of exemplars. Safe for concurrent reads.
class Pool {
 public:
  Pool() = default;

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t dim() const { return dim_; }
  bool has_embeddings() const { return dim_ > 0 || records_.empty(); }

  const std::vector<ExemplarRecord>& records() const { return records_; }
  const ExemplarRecord& operator[](RecordId id) const { return records_[id]; }

  std::span<const float> embedding(RecordId id) const {
    return records_[id].embedding;
  }

  // Min/max over the pool; {0, 0} for an empty pool.
  const LengthRange& length_stats(LengthMode mode) const {
    return stats_[mode_index(mode)];
  }

  // Non-fatal ingestion notes (empty targets and the like).
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

  friend bool operator==(const Pool& a, const Pool& b) {
    return a.dim_ == b.dim_ && a.records_ == b.records_ && a.stats_ == b.stats_;
  }

 private:
  friend class PoolBuilder;

  std::vector<ExemplarRecord> records_;
  std::size_t dim_ = 0;
  std::array<LengthRange, 3> stats_{};
  std::vector<std::string> diagnostics_;
};

// Append-only staging area for a Pool. build() validates and freezes.
class PoolBuilder {
 public:
  RecordId add(std::string source, std::string target) {
    const RecordId id = records_.size();
    records_.push_back(make_record(id, std::move(source), std::move(target)));
    if (records_.back().tgt_len == 0) {
      diagnostics_.push_back("record " + std::to_string(id) +
                             ": empty target");
    }
    return id;
  }

  RecordId add(std::string source, std::string target,
               std::vector<float> embedding) {
    const RecordId id = add(std::move(source), std::move(target));
    records_.back().embedding = std::move(embedding);
    return id;
  }

  void note(std::string message) { diagnostics_.push_back(std::move(message)); }

  std::size_t size() const { return records_.size(); }
  const ExemplarRecord& last() const { return records_.back(); }

  Pool build() && {
    Pool pool;
    pool.dim_ = records_.empty() ? 0 : records_.front().embedding.size();
    for (const auto& r : records_) {
      if (r.embedding.size() != pool.dim_) {
        throw InputError("record " + std::to_string(r.id) +
                         ": embedding dimension " +
                         std::to_string(r.embedding.size()) + ", expected " +
                         std::to_string(pool.dim_));
      }
    }
    for (LengthMode mode :
         {LengthMode::kTgtWords, LengthMode::kSrcWords, LengthMode::kCr}) {
      LengthRange range;
      if (!records_.empty()) {
        range.min = std::numeric_limits<double>::infinity();
        range.max = -std::numeric_limits<double>::infinity();
        for (const auto& r : records_) {
          range.min = std::min(range.min, r.length(mode));
          range.max = std::max(range.max, r.length(mode));
        }
      }
      pool.stats_[mode_index(mode)] = range;
    }
    pool.records_ = std::move(records_);
    pool.diagnostics_ = std::move(diagnostics_);
    records_.clear();
    return pool;
  }

 private:
  std::vector<ExemplarRecord> records_;
  std::vector<std::string> diagnostics_;
};

struct QueryInstance {
  std::string source;
  std::size_t src_len = 0;
  std::vector<float> embedding;
  std::optional<std::string> gold_target;
};

// ---------------------------------------------------------------------------
// Embedding files: "EMB1", u32 count, u32 dim, then count*dim f32, all
// little-endian, row-major.

struct EmbeddingMatrix {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * dim, dim);
  }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline std::string encode_embeddings(const EmbeddingMatrix& m) {
  std::string out = "EMB1";
  detail::put_u32(out, static_cast<std::uint32_t>(m.count));
  detail::put_u32(out, static_cast<std::uint32_t>(m.dim));
  out.reserve(out.size() + m.values.size() * 4);
  for (float f : m.values) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

// A zero-byte buffer decodes as an empty matrix.
inline EmbeddingMatrix decode_embeddings(std::string_view bytes,
                                         const std::string& what = "embeddings") {
  EmbeddingMatrix m;
  if (bytes.empty()) return m;
  if (bytes.size() < 12 || bytes.substr(0, 4) != "EMB1") {
    throw InputError(what + ": missing EMB1 header");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  m.count = detail::get_u32(p + 4);
  m.dim = detail::get_u32(p + 8);
  const std::size_t expected = 12 + m.count * m.dim * 4;
  if (bytes.size() != expected) {
    throw InputError(what + ": expected " + std::to_string(expected) +
                     " bytes for " + std::to_string(m.count) + "x" +
                     std::to_string(m.dim) + ", found " +
                     std::to_string(bytes.size()));
  }
  m.values.resize(m.count * m.dim);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] = std::bit_cast<float>(detail::get_u32(p + 12 + 4 * i));
  }
  return m;
}

inline void write_embeddings(const std::filesystem::path& path,
                             const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  const std::string bytes = encode_embeddings(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(detail::read_file(path), path.string());
}

inline EmbeddingMatrix embeddings_of(const Pool& pool) {
  EmbeddingMatrix m;
  m.count = pool.size();
  m.dim = pool.dim();
  m.values.reserve(m.count * m.dim);
  for (const auto& r : pool.records()) {
    m.values.insert(m.values.end(), r.embedding.begin(), r.embedding.end());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Dataset ingestion.

enum class DatasetFormat { kJsonl, kTsv };

inline DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "jsonl") return DatasetFormat::kJsonl;
  if (s == "tsv") return DatasetFormat::kTsv;
  throw InputError("unknown dataset format '" + std::string(s) + "'");
}

inline DatasetFormat guess_dataset_format(const std::filesystem::path& path) {
  return path.extension() == ".tsv" ? DatasetFormat::kTsv : DatasetFormat::kJsonl;
}

inline std::string_view to_string(DatasetFormat f) {
  return f == DatasetFormat::kTsv ? "tsv" : "jsonl";
}

// Records get ids in file order. Blank lines are skipped. Any malformed
// line, missing field, empty source or stored "cr" that disagrees with the
// recomputed ratio fails the whole ingestion with the line number.
inline Pool ingest_dataset(std::istream& in, DatasetFormat format,
                           const std::string& name = "dataset") {
  PoolBuilder builder;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = name + ":" + std::to_string(line_no) + ": ";
    std::string source, target;
    std::optional<double> stored_cr;
    if (format == DatasetFormat::kJsonl) {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw InputError(where + "malformed JSON (" + e.what() + ")");
      }
      if (!obj.is_object()) throw InputError(where + "expected a JSON object");
      for (const char* key : {"source", "target"}) {
        if (!obj.contains(key) || !obj[key].is_string()) {
          throw InputError(where + "missing string field \"" + key + "\"");
        }
      }
      source = obj["source"].get<std::string>();
      target = obj["target"].get<std::string>();
      if (obj.contains("cr") && obj["cr"].is_number()) {
        stored_cr = obj["cr"].get<double>();
      }
    } else {
      const auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
        throw InputError(where + "expected exactly two tab-separated columns");
      }
      source = line.substr(0, tab);
      target = line.substr(tab + 1);
    }
    try {
      builder.add(std::move(source), std::move(target));
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    if (stored_cr && *stored_cr != builder.last().cr) {
      throw InputError(where + "stored cr " + std::to_string(*stored_cr) +
                       " does not match tgt_len/src_len = " +
                       std::to_string(builder.last().cr));
    }
  }
  return std::move(builder).build();
}

inline Pool ingest_dataset(const std::filesystem::path& path,
                           DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset " + path.string());
  return ingest_dataset(in, format, path.string());
}

inline Pool attach_embeddings(const Pool& pool, const EmbeddingMatrix& m) {
  if (m.count != pool.size()) {
    throw InputError("embedding count mismatch: expected " +
                     std::to_string(pool.size()) + " rows, found " +
                     std::to_string(m.count));
  }
  if (m.count > 0 && m.dim == 0) {
    throw InputError("embedding dimension must be at least 1");
  }
  PoolBuilder builder;
  for (const auto& r : pool.records()) {
    auto row = m.row(r.id);
    builder.add(r.source, r.target, std::vector<float>(row.begin(), row.end()));
  }
  for (const auto& d : pool.diagnostics()) {
    if (d.find("empty target") == std::string::npos) builder.note(d);
  }
  return std::move(builder).build();
}

inline Pool attach_embeddings(const Pool& pool,
                              const std::filesystem::path& embedding_file) {
  return attach_embeddings(pool, read_embeddings(embedding_file));
}

// ---------------------------------------------------------------------------
// Deterministic stand-in embedder: each lowercased whitespace token seeds a
// pseudo-random direction; the sum is L2-normalised. Identical text and seed
// give identical vectors.

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void add_direction(std::vector<double>& acc, std::uint64_t state) {
  for (auto& v : acc) {
    state = mix64(state);
    // Centered uniform in [-1, 1).
    v += static_cast<double>(state >> 11) * 0x1.0p-52 - 1.0;
  }
}

}  // namespace detail

inline std::vector<float> test_embedder(std::string_view text, std::size_t dim,
                                        std::uint64_t seed) {
  if (dim == 0) throw InputError("test_embedder: dim must be >= 1");
  std::vector<double> acc(dim, 0.0);
  const auto words = split_words(text);
  if (words.empty()) {
    detail::add_direction(acc, detail::fnv1a("", seed ^ 0x5eedULL));
  }
  for (auto w : words) {
    std::string lower(w);
    for (auto& c : lower) {
      const auto u = static_cast<unsigned char>(c);
      if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    detail::add_direction(acc, detail::fnv1a(lower, seed));
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    acc.assign(dim, 0.0);
    acc[0] = 1.0;
    norm = 1.0;
  }
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

// ---------------------------------------------------------------------------
// Length-targeted sampling: uniform without replacement among records whose
// mode value lies within +-tolerance of the desired value.

inline std::vector<RecordId> sample_by_length(const Pool& pool, LengthMode mode,
                                              double desired, double tolerance,
                                              std::size_t k, std::uint64_t seed) {
  if (k == 0) throw InputError("sample_by_length: k must be >= 1");
  if (!(tolerance >= 0.0)) throw InputError("sample_by_length: tolerance must be >= 0");
  // Absorbs representation error in decimal inputs such as 0.45.
  constexpr double kSlack = 1e-12;
  std::vector<RecordId> eligible;
  for (const auto& r : pool.records()) {
    if (std::fabs(r.length(mode) - desired) <= tolerance + kSlack) {
      eligible.push_back(r.id);
    }
  }
  if (eligible.size() < k) {
    throw InputError("sample_by_length: only " + std::to_string(eligible.size()) +
                     " eligible records for " + std::string(to_string(mode)) +
                     "=" + std::to_string(desired) + " +- " +
                     std::to_string(tolerance) + ", need " + std::to_string(k));
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(k);
  return eligible;
}

// ---------------------------------------------------------------------------
// Manifest persistence. The manifest names the dataset and embedding files
// (relative paths resolve against the manifest's directory) and carries the
// precomputed length statistics, which are verified on load.

struct PoolManifest {
  std::filesystem::path dataset;
  DatasetFormat format = DatasetFormat::kJsonl;
  std::filesystem::path embeddings;
  std::size_t n = 0;
  std::size_t dim = 0;
  std::array<LengthRange, 3> stats{};
};

inline nlohmann::json stats_json(const Pool& pool) {
  nlohmann::json j = nlohmann::json::object();
  for (LengthMode mode :
       {LengthMode::kTgtWords, LengthMode::kSrcWords, LengthMode::kCr}) {
    const auto& r = pool.length_stats(mode);
    j[std::string(to_string(mode))] = {{"min", r.min}, {"max", r.max}};
  }
  return j;
}

inline void write_manifest(const std::filesystem::path& manifest_path,
                           const Pool& pool,
                           const std::filesystem::path& dataset,
                           DatasetFormat format,
                           const std::filesystem::path& embeddings) {
  nlohmann::json j;
  j["version"] = 1;
  j["dataset"] = dataset.generic_string();
  j["format"] = std::string(to_string(format));
  j["embeddings"] = embeddings.generic_string();
  j["n"] = pool.size();
  j["dim"] = pool.dim();
  j["length_stats"] = stats_json(pool);
  std::ofstream out(manifest_path);
  if (!out) throw InputError("cannot write " + manifest_path.string());
  out << j.dump(2) << "\n";
}

inline PoolManifest read_manifest(const std::filesystem::path& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(manifest_path.string() + ": malformed manifest (" +
                     e.what() + ")");
  }
  PoolManifest m;
  try {
    const auto base = manifest_path.parent_path();
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() ? path : base / path;
    };
    m.dataset = resolve(j.at("dataset").get<std::string>());
    m.format = parse_dataset_format(j.value("format", std::string("jsonl")));
    m.embeddings = resolve(j.at("embeddings").get<std::string>());
    m.n = j.at("n").get<std::size_t>();
    m.dim = j.at("dim").get<std::size_t>();
    for (LengthMode mode :
         {LengthMode::kTgtWords, LengthMode::kSrcWords, LengthMode::kCr}) {
      const auto& s = j.at("length_stats").at(std::string(to_string(mode)));
      m.stats[mode_index(mode)] = {s.at("min").get<double>(),
                                   s.at("max").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(manifest_path.string() + ": " + e.what());
  }
  return m;
}

inline Pool load_pool(const std::filesystem::path& manifest_path) {
  const PoolManifest m = read_manifest(manifest_path);
  Pool pool = attach_embeddings(ingest_dataset(m.dataset, m.format), m.embeddings);
  if (pool.size() != m.n || pool.dim() != m.dim) {
    throw InputError(manifest_path.string() + ": manifest says " +
                     std::to_string(m.n) + "x" + std::to_string(m.dim) +
                     ", files hold " + std::to_string(pool.size()) + "x" +
                     std::to_string(pool.dim()));
  }
  for (LengthMode mode :
       {LengthMode::kTgtWords, LengthMode::kSrcWords, LengthMode::kCr}) {
    if (!(pool.length_stats(mode) == m.stats[mode_index(mode)])) {
      throw InputError(manifest_path.string() + ": length_stats for " +
                       std::string(to_string(mode)) +
                       " disagree with the dataset");
    }
  }
  return pool;
}

// Writes <stem>.jsonl and <stem>.emb next to the manifest, then the
// manifest itself.
inline void save_pool(const Pool& pool, const std::filesystem::path& manifest_path) {
  const auto stem = manifest_path.stem().string();
  const auto dir = manifest_path.parent_path();
  const std::filesystem::path dataset = stem + ".jsonl";
  const std::filesystem::path emb = stem + ".emb";
  {
    std::ofstream out(dir / dataset);
    if (!out) throw InputError("cannot write " + (dir / dataset).string());
    for (const auto& r : pool.records()) {
      out << nlohmann::json{{"source", r.source}, {"target", r.target}}.dump()
          << "\n";
    }
  }
  write_embeddings(dir / emb, embeddings_of(pool));
  write_manifest(manifest_path, pool, dataset, DatasetFormat::kJsonl, emb);
}

// ---------------------------------------------------------------------------
// Query files: JSONL {"source", optional "gold"} aligned by line with an
// embedding file.

inline std::vector<QueryInstance> load_queries(std::istream& in,
                                               const EmbeddingMatrix& emb,
                                               const std::string& name = "queries") {
  std::vector<QueryInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = name + ":" + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object() || !obj.contains("source") || !obj["source"].is_string()) {
      throw InputError(where + "missing string field \"source\"");
    }
    QueryInstance q;
    q.source = obj["source"].get<std::string>();
    q.src_len = word_count(q.source);
    if (obj.contains("gold") && obj["gold"].is_string()) {
      q.gold_target = obj["gold"].get<std::string>();
    }
    out.push_back(std::move(q));
  }
  if (emb.count != out.size()) {
    throw InputError(name + ": " + std::to_string(out.size()) +
                     " queries but " + std::to_string(emb.count) +
                     " embedding rows");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto row = emb.row(i);
    out[i].embedding.assign(row.begin(), row.end());
  }
  return out;
}

inline std::vector<QueryInstance> load_queries(const std::filesystem::path& path,
                                               const std::filesystem::path& emb_path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open queries " + path.string());
  return load_queries(in, read_embeddings(emb_path), path.string());
}

}  // namespace dlmmr
