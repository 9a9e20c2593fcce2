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

// Relevance and length primitives shared by every strategy: cosine
// similarity/distance, absolute length difference and min-max scaling.
//
// Pairwise length differences are never materialised. Because the smallest
// pairwise difference is always 0 (i == j) and the largest is
// max(len) - min(len), the min-max-scaled pairwise matrix entry is exactly
// |len_i - len_j| / (max - min), which needs only the n lengths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory_resource>
#include <span>
#include <string>
#include <vector>

#include "dlmmr/common.hpp"
#include "dlmmr/pool.hpp"

namespace dlmmr {

// Instrumentation for the cost claims. Each selection path bumps the
// counter matching the work it does.
struct ScoreCounter {
  std::uint64_t query_scores = 0;       // query-vs-record similarity
  std::uint64_t pairwise_embedding = 0; // record-vs-record similarity
  std::uint64_t length_reads = 0;       // scalar length lookups at prep

  ScoreCounter& operator+=(const ScoreCounter& o) {
    query_scores += o.query_scores;
    pairwise_embedding += o.pairwise_embedding;
    length_reads += o.length_reads;
    return *this;
  }
};

// dot(a, b) / (|a| |b|), accumulated in double in index order. The
// expression is symmetric in a and b bit-for-bit.
inline double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw InputError("cosine_similarity: dimension mismatch (" +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) {
    throw InputError("cosine_similarity: zero vector");
  }
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

inline double semantic_distance(std::span<const float> a, std::span<const float> b) {
  return 1.0 - cosine_similarity(a, b);
}

inline double length_diff(const ExemplarRecord& i, const ExemplarRecord& j,
                          LengthMode mode) {
  return std::fabs(i.length(mode) - j.length(mode));
}

// (v - min) / (max - min); a constant input maps to all zeros.
inline std::vector<double> minmax_scale(std::span<const double> values) {
  if (values.empty()) throw InputError("minmax_scale: empty input");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, range = *hi - *lo;
  std::vector<double> out(values.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = (values[i] - min) / range;
    }
  }
  return out;
}

// Raw 1 - cos distance from the query to every record, in id order.
inline std::vector<double> raw_query_distances(const Pool& pool,
                                               std::span<const float> query,
                                               ScoreCounter* counter = nullptr) {
  if (!pool.empty() && query.size() != pool.dim()) {
    throw InputError("query dimension " + std::to_string(query.size()) +
                     " does not match pool dimension " +
                     std::to_string(pool.dim()));
  }
  std::vector<double> d(pool.size());
  for (RecordId i = 0; i < pool.size(); ++i) {
    d[i] = semantic_distance(query, pool.embedding(i));
  }
  if (counter) counter->query_scores += pool.size();
  return d;
}

struct ScaledQueryDistances {
  std::vector<double> values;  // each in [0, 1], one per record
};

// Per-query min-max scaling over the whole pool.
inline ScaledQueryDistances query_distances(const Pool& pool,
                                            std::span<const float> query,
                                            ScoreCounter* counter = nullptr) {
  if (pool.empty()) return {};
  const auto raw = raw_query_distances(pool, query, counter);
  return {minmax_scale(raw)};
}

// The n mode values plus the pool-wide range. Storage is O(n); scaled
// pairwise differences are computed on demand.
class LengthDiffTable {
 public:
  using allocator_type = std::pmr::polymorphic_allocator<double>;

  LengthDiffTable() = default;

  static LengthDiffTable build(const Pool& pool, LengthMode mode,
                               ScoreCounter* counter = nullptr,
                               std::pmr::memory_resource* mem =
                                   std::pmr::get_default_resource()) {
    LengthDiffTable t(mem);
    t.mode_ = mode;
    t.lengths_.reserve(pool.size());
    for (const auto& r : pool.records()) t.lengths_.push_back(r.length(mode));
    if (counter) counter->length_reads += pool.size();
    if (!t.lengths_.empty()) {
      const auto [lo, hi] = std::minmax_element(t.lengths_.begin(), t.lengths_.end());
      t.range_ = {*lo, *hi};
    }
    return t;
  }

  std::size_t size() const { return lengths_.size(); }
  LengthMode mode() const { return mode_; }
  const LengthRange& global_range() const { return range_; }
  double length(RecordId i) const { return lengths_[i]; }
  std::span<const double> lengths() const { return lengths_; }

  double scaled_diff(RecordId i, RecordId j) const {
    const double range = range_.span();
    if (!(range > 0.0)) return 0.0;
    return std::fabs(lengths_[i] - lengths_[j]) / range;
  }

  std::size_t bytes() const { return lengths_.size() * sizeof(double); }

 private:
  explicit LengthDiffTable(std::pmr::memory_resource* mem) : lengths_(mem) {}

  std::pmr::vector<double> lengths_;
  LengthRange range_;
  LengthMode mode_ = LengthMode::kTgtWords;
};

inline double scaled_length_diff(const LengthDiffTable& table, RecordId i,
                                  RecordId j) {
  return table.scaled_diff(i, j);
}

}  // namespace dlmmr
