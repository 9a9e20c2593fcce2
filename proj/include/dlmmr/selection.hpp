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

// Exemplar selection: Random, nearest neighbour, MMR over pairwise
// similarities, and length-diverse MMR (DL-MMR).
//
// Both greedy loops seed the first pick with relevance alone (the diversity
// term over an empty selection is 0) and break score ties toward the lower
// record id.
//
//   MMR     next = argmax_j (1 - lambda) sim(q, j) - lambda max_{i in T} sim(j, i)
//   DL-MMR  next = argmin_j (1 - lambda) dist'(q, j) - lambda min_{i in T} diff'(j, i)
//
// where sim is raw cosine similarity and the primed terms are min-max scaled
// to [0, 1] over the pool.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory_resource>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dlmmr/common.hpp"
#include "dlmmr/parallel.hpp"
#include "dlmmr/pool.hpp"
#include "dlmmr/scaling.hpp"

namespace dlmmr {

inline constexpr std::size_t kDefaultExemplarCount = 8;
inline constexpr std::uint64_t kDefaultSeed = 42;

// 0.1 for DL-MMR on target length or compression ratio, 0.5 for DL-MMR on
// source length and for MMR.
inline double default_lambda(Strategy strategy, LengthMode mode) {
  if (strategy == Strategy::kDlMmr && mode != LengthMode::kSrcWords) return 0.1;
  if (strategy == Strategy::kDlMmr || strategy == Strategy::kMmr) return 0.5;
  return 0.0;
}

struct SelectionConfig {
  Strategy strategy = Strategy::kDlMmr;
  std::size_t k = kDefaultExemplarCount;
  double lambda = 0.1;
  LengthMode mode = LengthMode::kTgtWords;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::size_t> candidate_limit;  // off by default: full scan
};

inline void validate(const SelectionConfig& c, std::size_t n) {
  if (c.k < 1 || c.k > n) {
    throw InputError("k must be in [1, " + std::to_string(n) + "], got " +
                     std::to_string(c.k));
  }
  if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) {
    throw InputError("lambda must be in [0, 1], got " + std::to_string(c.lambda));
  }
  if (c.candidate_limit && *c.candidate_limit < c.k) {
    throw InputError("candidate limit " + std::to_string(*c.candidate_limit) +
                     " is smaller than k");
  }
}

struct StepTrace {
  RecordId id = 0;
  double score = 0.0;      // combined objective of the winner
  double relevance = 0.0;  // similarity (MMR) or scaled distance (DL-MMR, NN raw)
  double diversity = 0.0;  // max similarity / min scaled diff to T; 0 at step 1

  friend bool operator==(const StepTrace&, const StepTrace&) = default;
};

struct SelectionResult {
  std::vector<RecordId> selected;
  std::vector<StepTrace> steps;
  // Scores computed at query time (query-vs-record plus any record-vs-record).
  std::uint64_t score_count = 0;
  // Scores computed once at pool-preparation time for this strategy.
  std::uint64_t prep_score_count = 0;
  ScoreCounter counters;

  friend bool operator==(const SelectionResult& a, const SelectionResult& b) {
    return a.selected == b.selected && a.steps == b.steps &&
           a.score_count == b.score_count &&
           a.prep_score_count == b.prep_score_count;
  }
};

// ---------------------------------------------------------------------------
// MMR's pool-side structure: the strict upper triangle of record-vs-record
// cosine similarities, n(n-1)/2 entries, packed row-major.

class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;

  static std::uint64_t entry_count(std::uint64_t n) {
    return n < 2 ? 0 : n * (n - 1) / 2;
  }

  static SimilarityMatrix build(const Pool& pool, ScoreCounter* counter = nullptr,
                                std::size_t jobs = 1,
                                std::pmr::memory_resource* mem =
                                    std::pmr::get_default_resource()) {
    SimilarityMatrix m(mem);
    const std::size_t n = pool.size();
    m.n_ = n;
    m.values_.resize(entry_count(n));
    std::vector<std::uint64_t> row_counts(n, 0);
    parallel_for(n, jobs, [&](std::size_t i) {
      const auto a = pool.embedding(i);
      std::size_t at = m.offset(i);
      for (std::size_t j = i + 1; j < n; ++j) {
        m.values_[at++] = cosine_similarity(a, pool.embedding(j));
      }
      row_counts[i] = n - i - 1;
    });
    if (counter) {
      for (auto c : row_counts) counter->pairwise_embedding += c;
    }
    return m;
  }

  std::size_t size() const { return n_; }
  std::uint64_t entries() const { return values_.size(); }
  std::size_t bytes() const { return values_.size() * sizeof(double); }

  double operator()(RecordId i, RecordId j) const {
    if (i == j) return 1.0;
    if (i > j) std::swap(i, j);
    return values_[offset(i) + (j - i - 1)];
  }

 private:
  explicit SimilarityMatrix(std::pmr::memory_resource* mem) : values_(mem) {}

  std::size_t offset(std::size_t i) const { return i * (2 * n_ - i - 1) / 2; }

  std::size_t n_ = 0;
  std::pmr::vector<double> values_;
};

namespace detail {

// Candidate ids in id order. With a limit, keeps the `limit` nearest by raw
// distance (ties to lower id) and restores id order.
inline std::vector<RecordId> candidates(std::span<const double> dist,
                                        std::optional<std::size_t> limit) {
  std::vector<RecordId> ids(dist.size());
  std::iota(ids.begin(), ids.end(), RecordId{0});
  if (limit && *limit < ids.size()) {
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(*limit),
                      ids.end(), [&](RecordId a, RecordId b) {
                        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                      });
    ids.resize(*limit);
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

}  // namespace detail

inline SelectionResult select_random(const Pool& pool, std::size_t k,
                                     std::uint64_t seed) {
  if (k > pool.size()) {
    throw InputError("k = " + std::to_string(k) + " exceeds pool size " +
                     std::to_string(pool.size()));
  }
  std::vector<RecordId> ids(pool.size());
  std::iota(ids.begin(), ids.end(), RecordId{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(ids[i], ids[i + uniform_index(rng, ids.size() - i)]);
  }
  ids.resize(k);
  SelectionResult res;
  for (RecordId id : ids) res.steps.push_back({id, 0.0, 0.0, 0.0});
  res.selected = std::move(ids);
  return res;
}

inline SelectionResult select_nn(const Pool& pool, std::span<const float> query,
                                 std::size_t k) {
  if (k > pool.size()) {
    throw InputError("k = " + std::to_string(k) + " exceeds pool size " +
                     std::to_string(pool.size()));
  }
  SelectionResult res;
  const auto dist = raw_query_distances(pool, query, &res.counters);
  std::vector<RecordId> ids(pool.size());
  std::iota(ids.begin(), ids.end(), RecordId{0});
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](RecordId a, RecordId b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });
  ids.resize(k);
  for (RecordId id : ids) res.steps.push_back({id, dist[id], dist[id], 0.0});
  res.selected = std::move(ids);
  res.score_count = res.counters.query_scores;
  return res;
}

// Greedy MMR core. relevance[j] is sim(q, j); sim(i, j) is the pairwise
// similarity. Maximises (1 - lambda) rel - lambda max_{i in T} sim.
template <class PairSim>
std::vector<StepTrace> mmr_greedy(std::span<const double> relevance, PairSim&& sim,
                                  std::span<const RecordId> candidates, std::size_t k,
                                  double lambda) {
  std::vector<double> max_sim(relevance.size(), -std::numeric_limits<double>::infinity());
  std::vector<char> taken(relevance.size(), 0);
  std::vector<StepTrace> steps;
  for (std::size_t step = 0; step < k; ++step) {
    StepTrace best{0, -std::numeric_limits<double>::infinity(), 0.0, 0.0};
    bool found = false;
    for (RecordId j : candidates) {
      if (taken[j]) continue;
      const double div = step == 0 ? 0.0 : max_sim[j];
      const double score = (1.0 - lambda) * relevance[j] - lambda * div;
      if (!found || score > best.score) {
        found = true;
        best = {j, score, relevance[j], div};
      }
    }
    if (!found) break;
    taken[best.id] = 1;
    steps.push_back(best);
    for (RecordId j : candidates) {
      if (!taken[j]) max_sim[j] = std::max(max_sim[j], sim(j, best.id));
    }
  }
  return steps;
}

// Greedy DL-MMR core. scaled[j] is the min-max-scaled query distance;
// diff(i, j) the scaled length difference. Minimises
// (1 - lambda) dist - lambda min_{i in T} diff.
template <class PairDiff>
std::vector<StepTrace> dlmmr_greedy(std::span<const double> scaled, PairDiff&& diff,
                                    std::span<const RecordId> candidates, std::size_t k,
                                    double lambda) {
  std::vector<double> min_diff(scaled.size(), std::numeric_limits<double>::infinity());
  std::vector<char> taken(scaled.size(), 0);
  std::vector<StepTrace> steps;
  for (std::size_t step = 0; step < k; ++step) {
    StepTrace best{0, std::numeric_limits<double>::infinity(), 0.0, 0.0};
    bool found = false;
    for (RecordId j : candidates) {
      if (taken[j]) continue;
      const double div = step == 0 ? 0.0 : min_diff[j];
      const double score = (1.0 - lambda) * scaled[j] - lambda * div;
      if (!found || score < best.score) {
        found = true;
        best = {j, score, scaled[j], div};
      }
    }
    if (!found) break;
    taken[best.id] = 1;
    steps.push_back(best);
    for (RecordId j : candidates) {
      if (!taken[j]) min_diff[j] = std::min(min_diff[j], diff(j, best.id));
    }
  }
  return steps;
}

namespace detail {

inline void fill_selected(SelectionResult& res) {
  res.selected.clear();
  for (const auto& s : res.steps) res.selected.push_back(s.id);
}

}  // namespace detail

inline SelectionResult select_mmr(const Pool& pool, const SimilarityMatrix& sims,
                                  std::span<const float> query, std::size_t k,
                                  double lambda,
                                  std::optional<std::size_t> candidate_limit = {}) {
  validate({Strategy::kMmr, k, lambda, LengthMode::kTgtWords, 0, candidate_limit},
           pool.size());
  if (sims.size() != pool.size()) {
    throw InputError("similarity matrix was built for a different pool");
  }
  SelectionResult res;
  res.prep_score_count = sims.entries();
  if (!pool.empty() && query.size() != pool.dim()) {
    throw InputError("query dimension " + std::to_string(query.size()) +
                     " does not match pool dimension " + std::to_string(pool.dim()));
  }
  std::vector<double> rel(pool.size()), dist(pool.size());
  for (RecordId j = 0; j < pool.size(); ++j) {
    rel[j] = cosine_similarity(query, pool.embedding(j));
    dist[j] = 1.0 - rel[j];
  }
  res.counters.query_scores += pool.size();
  const auto cand = detail::candidates(dist, candidate_limit);
  res.steps = mmr_greedy(rel, [&](RecordId i, RecordId j) { return sims(i, j); }, cand, k,
                         lambda);
  detail::fill_selected(res);
  res.score_count = res.counters.query_scores + res.counters.pairwise_embedding;
  return res;
}

inline SelectionResult select_dlmmr(const Pool& pool, const LengthDiffTable& lengths,
                                    std::span<const float> query, std::size_t k,
                                    double lambda,
                                    std::optional<std::size_t> candidate_limit = {}) {
  validate({Strategy::kDlMmr, k, lambda, lengths.mode(), 0, candidate_limit},
           pool.size());
  if (lengths.size() != pool.size()) {
    throw InputError("length table was built for a different pool");
  }
  SelectionResult res;
  res.prep_score_count = lengths.size();
  const auto raw = raw_query_distances(pool, query, &res.counters);
  const auto scaled = minmax_scale(raw);
  const auto cand = detail::candidates(raw, candidate_limit);
  res.steps = dlmmr_greedy(
      scaled, [&](RecordId i, RecordId j) { return lengths.scaled_diff(i, j); }, cand, k,
      lambda);
  detail::fill_selected(res);
  res.score_count = res.counters.query_scores;
  return res;
}

// Convenience overloads that prepare the pool-side structure per call.
inline SelectionResult select_mmr(const Pool& pool, std::span<const float> query,
                                  std::size_t k, double lambda) {
  ScoreCounter prep;
  const auto sims = SimilarityMatrix::build(pool, &prep);
  auto res = select_mmr(pool, sims, query, k, lambda);
  res.counters += prep;
  return res;
}

inline SelectionResult select_dlmmr(const Pool& pool, std::span<const float> query,
                                    std::size_t k, double lambda, LengthMode mode) {
  ScoreCounter prep;
  const auto table = LengthDiffTable::build(pool, mode, &prep);
  auto res = select_dlmmr(pool, table, query, k, lambda);
  res.counters += prep;
  return res;
}

// ---------------------------------------------------------------------------
// Prepares the strategy's pool-side structure once and serves many queries.

struct PrepOptions {
  std::size_t jobs = 1;
  std::pmr::memory_resource* memory = std::pmr::get_default_resource();
};

class Selector {
 public:
  Selector(const Pool& pool, SelectionConfig config, PrepOptions opts = {})
      : pool_(&pool), config_(config) {
    validate(config_, pool.size());
    if (config_.strategy == Strategy::kMmr) {
      sims_.emplace(
          SimilarityMatrix::build(pool, &prep_counter_, opts.jobs, opts.memory));
    } else if (config_.strategy == Strategy::kDlMmr) {
      lengths_.emplace(
          LengthDiffTable::build(pool, config_.mode, &prep_counter_, opts.memory));
    }
  }

  const SelectionConfig& config() const { return config_; }
  const ScoreCounter& prep_counter() const { return prep_counter_; }

  // query_index only matters for the random strategy, whose per-query seed
  // is derived from the configured seed and the index.
  SelectionResult select(std::span<const float> query,
                         std::uint64_t query_index = 0) const {
    switch (config_.strategy) {
      case Strategy::kRandom:
        return select_random(*pool_, config_.k, mix64(config_.seed + query_index));
      case Strategy::kNn:
        return select_nn(*pool_, query, config_.k);
      case Strategy::kMmr:
        return select_mmr(*pool_, *sims_, query, config_.k, config_.lambda,
                          config_.candidate_limit);
      case Strategy::kDlMmr:
        return select_dlmmr(*pool_, *lengths_, query, config_.k, config_.lambda,
                            config_.candidate_limit);
    }
    return {};
  }

  std::vector<SelectionResult> select_all(const std::vector<QueryInstance>& queries,
                                          std::size_t jobs = 1) const {
    std::vector<SelectionResult> out(queries.size());
    parallel_for(queries.size(), jobs,
                 [&](std::size_t i) { out[i] = select(queries[i].embedding, i); });
    return out;
  }

 private:
  const Pool* pool_;
  SelectionConfig config_;
  ScoreCounter prep_counter_;
  std::optional<SimilarityMatrix> sims_;
  std::optional<LengthDiffTable> lengths_;
};

}  // namespace dlmmr
