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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dlmmr/scaling.hpp"
#include "oracles.hpp"

namespace dlmmr {
namespace {

using V = std::vector<float>;

TEST(Cosine, HandCases) {
  EXPECT_DOUBLE_EQ(cosine_similarity(V{1, 0}, V{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(V{1, 0}, V{0, 1}), 0.0);
  EXPECT_NEAR(cosine_similarity(V{1, 1}, V{1, 0}), 0.7071, 1e-4);
  EXPECT_THROW(cosine_similarity(V{0, 0}, V{1, 0}), InputError);
  EXPECT_THROW(cosine_similarity(V{1, 0, 0}, V{1, 0}), InputError);
}

TEST(Cosine, SymmetricBitForBit) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto a = testing::random_vector(rng, 1 + i % 17);
    const auto b = testing::random_vector(rng, 1 + i % 17);
    EXPECT_EQ(cosine_similarity(a, b), cosine_similarity(b, a));
  }
}

TEST(SemanticDistance, HandCases) {
  EXPECT_DOUBLE_EQ(semantic_distance(V{0.3f, 0.4f}, V{0.3f, 0.4f}), 0.0);
  EXPECT_DOUBLE_EQ(semantic_distance(V{1, 0}, V{0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(semantic_distance(V{1, 2}, V{-1, -2}), 2.0);
}

TEST(SemanticDistance, SelfDistanceIsZero) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto a = testing::random_vector(rng, 1 + i % 9);
    EXPECT_NEAR(semantic_distance(a, a), 0.0, 1e-12);
  }
}

ExemplarRecord rec(std::size_t src, std::size_t tgt) {
  return make_record(0, testing::words(src), testing::words(tgt));
}

TEST(LengthDiff, HandCases) {
  EXPECT_EQ(length_diff(rec(30, 10), rec(30, 10), LengthMode::kTgtWords), 0.0);
  EXPECT_EQ(length_diff(rec(30, 20), rec(30, 10), LengthMode::kTgtWords), 10.0);
  EXPECT_EQ(length_diff(rec(30, 20), rec(10, 10), LengthMode::kSrcWords), 20.0);
  // cr 0.5 vs 0.8
  EXPECT_NEAR(length_diff(rec(10, 5), rec(10, 8), LengthMode::kCr), 0.3, 1e-12);
  EXPECT_EQ(length_diff(rec(10, 5), rec(10, 8), LengthMode::kCr),
            length_diff(rec(10, 8), rec(10, 5), LengthMode::kCr));
}

TEST(MinMaxScale, HandCases) {
  EXPECT_EQ(minmax_scale(std::vector<double>{2, 4, 6}), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(minmax_scale(std::vector<double>{5, 5, 5}), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(minmax_scale(std::vector<double>{1}), (std::vector<double>{0}));
  EXPECT_THROW(minmax_scale(std::vector<double>{}), InputError);
}

TEST(MinMaxScale, IdempotentOnUnitRange) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(2 + t % 10);
    for (auto& x : v) x = u(rng);
    v[0] = 0.0;
    v[1] = 1.0;
    EXPECT_EQ(minmax_scale(v), v);
    const auto s = minmax_scale(v);
    for (double x : s) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
}

TEST(QueryDistances, HandCases) {
  {
    PoolBuilder b;
    b.add("a b", "a", {0.6f, 0.8f});
    const Pool pool = std::move(b).build();
    EXPECT_EQ(query_distances(pool, V{1, 0}).values, std::vector<double>{0.0});
  }
  {
    PoolBuilder b;
    b.add("a b", "a", {0.0f, 1.0f});
    b.add("a b", "a", {1.0f, 1.0f});
    b.add("a b", "a", {1.0f, 0.0f});
    const Pool pool = std::move(b).build();
    const auto d = query_distances(pool, V{1, 0}).values;
    EXPECT_EQ(d[2], 0.0);  // identical to the query
    EXPECT_EQ(d[0], 1.0);
    EXPECT_THROW(query_distances(pool, V{1, 0, 0}), InputError);
  }
}

TEST(QueryDistances, RawDistancesPointTwoFourSix) {
  // Raw distances 0.2, 0.4, 0.6 via cos = 0.8, 0.6, 0.4.
  PoolBuilder b;
  for (double c : {0.8, 0.6, 0.4}) {
    b.add("a", "a", {static_cast<float>(c), static_cast<float>(std::sqrt(1 - c * c))});
  }
  const Pool pool = std::move(b).build();
  const auto d = query_distances(pool, V{1, 0}).values;
  EXPECT_NEAR(d[0], 0.0, 1e-7);
  EXPECT_NEAR(d[1], 0.5, 1e-6);
  EXPECT_NEAR(d[2], 1.0, 1e-7);
}

Pool pool_with_tgt(const std::vector<std::size_t>& lens) {
  PoolBuilder b;
  for (auto t : lens) b.add(testing::words(30), testing::words(t), {1.0f});
  return std::move(b).build();
}

TEST(ScaledLengthDiff, HandCases) {
  const Pool pool = pool_with_tgt({10, 10, 20});
  const auto table = LengthDiffTable::build(pool, LengthMode::kTgtWords);
  EXPECT_EQ(scaled_length_diff(table, 1, 1), 0.0);
  EXPECT_EQ(scaled_length_diff(table, 0, 2), 1.0);
  EXPECT_EQ(scaled_length_diff(table, 0, 1), 0.0);
  const Pool flat = pool_with_tgt({7, 7, 7});
  const auto flat_table = LengthDiffTable::build(flat, LengthMode::kTgtWords);
  EXPECT_EQ(scaled_length_diff(flat_table, 0, 2), 0.0);
}

TEST(ScaledLengthDiff, CountsOneReadPerRecord) {
  const Pool pool = pool_with_tgt({1, 2, 3, 4, 5});
  ScoreCounter c;
  LengthDiffTable::build(pool, LengthMode::kCr, &c);
  EXPECT_EQ(c.length_reads, 5u);
  EXPECT_EQ(c.pairwise_embedding, 0u);
}

TEST(ScaledLengthDiff, MatchesMaterializedMatrixAndIsSymmetric) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Pool pool = testing::random_pool(rng, 1 + rng() % 60, 2);
    for (LengthMode mode : {LengthMode::kTgtWords, LengthMode::kSrcWords, LengthMode::kCr}) {
      const auto table = LengthDiffTable::build(pool, mode);
      const auto full = testing::materialized_scaled_diffs(pool, mode);
      for (RecordId i = 0; i < pool.size(); ++i) {
        for (RecordId j = 0; j < pool.size(); ++j) {
          const double v = scaled_length_diff(table, i, j);
          ASSERT_NEAR(v, full[i][j], 1e-12);
          ASSERT_EQ(v, scaled_length_diff(table, j, i));
          ASSERT_EQ(length_diff(pool[i], pool[j], mode), length_diff(pool[j], pool[i], mode));
        }
      }
    }
  }
}

}  // namespace
}  // namespace dlmmr
