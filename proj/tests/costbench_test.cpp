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

#include <chrono>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dlmmr/costbench.hpp"

namespace dlmmr {
namespace {

TEST(ScoreCount, Formula) {
  EXPECT_EQ(score_count(Strategy::kMmr, 200000), 19999900000ULL);
  EXPECT_EQ(score_count(Strategy::kDlMmr, 200000), 200000ULL);
  for (Strategy s : {Strategy::kRandom, Strategy::kNn, Strategy::kMmr, Strategy::kDlMmr}) {
    EXPECT_EQ(score_count(s, 0), 0u);
  }
  EXPECT_EQ(score_count(Strategy::kNn, 1000), 0u);
  EXPECT_EQ(score_count(Strategy::kMmr, 1), 0u);
}

TEST(EstimateMemory, RatioIsHalfNMinusOne) {
  EXPECT_EQ(estimate_memory(Strategy::kMmr, 2, 4), 4u);
  EXPECT_EQ(estimate_memory(Strategy::kDlMmr, 2, 4), 8u);
  for (std::uint64_t bpe : {1u, 2u, 4u, 8u}) {
    const double r = static_cast<double>(estimate_memory(Strategy::kMmr, 200000, bpe)) /
                     static_cast<double>(estimate_memory(Strategy::kDlMmr, 200000, bpe));
    EXPECT_EQ(r, 99999.5);
  }
  EXPECT_EQ(analytic_ratio(200000), 99999.5);
  EXPECT_THROW(estimate_memory(Strategy::kMmr, 10, 0), InputError);
}

TEST(AnalyticReport, JuxtaposesReportedFigures) {
  const auto text = analytic_report(200000, 8);
  EXPECT_NE(text.find("99999.5"), std::string::npos) << text;
  EXPECT_NE(text.find("781512.6"), std::string::npos) << text;
  EXPECT_NE(text.find("500092.5"), std::string::npos) << text;
}

TEST(CountingResource, TracksPeak) {
  CountingResource mem;
  {
    std::pmr::vector<double> v(&mem);
    v.resize(1000);
    EXPECT_GE(mem.current(), 8000u);
  }
  EXPECT_EQ(mem.current(), 0u);
  EXPECT_GE(mem.peak(), 8000u);
}

TEST(Bench, MeasuredBytesTrackEstimate) {
  const Pool pool = synthetic_pool(300, 16, 1);
  const auto queries = synthetic_queries(5, 16, 1);
  BenchOptions opt;
  opt.repetitions = 1;
  const auto mmr = bench_cell(pool, queries, Strategy::kMmr, opt);
  EXPECT_EQ(mmr.score_count, 300u * 299u / 2u);
  EXPECT_EQ(mmr.est_bytes, mmr.score_count * 8);
  EXPECT_GE(mmr.measured_bytes, mmr.est_bytes);
  EXPECT_LE(mmr.measured_bytes, mmr.est_bytes + 4096);
  const auto dl = bench_cell(pool, queries, Strategy::kDlMmr, opt);
  EXPECT_EQ(dl.score_count, 300u);
  EXPECT_GE(dl.measured_bytes, 2400u);
  EXPECT_LE(dl.measured_bytes, 2400u + 4096);
  const auto nn = bench_cell(pool, queries, Strategy::kNn, opt);
  EXPECT_EQ(nn.score_count, 0u);
  EXPECT_EQ(nn.measured_bytes, 0u);
}

TEST(Bench, SingleRecordPool) {
  BenchOptions opt;
  opt.pool_sizes = {1};
  opt.queries = 3;
  opt.repetitions = 1;
  opt.dim = 8;
  for (const auto& r : bench(opt)) {
    EXPECT_EQ(r.score_count, r.strategy == Strategy::kDlMmr ? 1u : 0u);
    EXPECT_LT(r.t_construct_ms, 50.0);
  }
}

TEST(Bench, CountsDeterministicAndJobIndependent) {
  BenchOptions opt;
  opt.pool_sizes = {120, 250};
  opt.queries = 4;
  opt.repetitions = 1;
  opt.dim = 8;
  const auto a = bench(opt);
  const auto b = bench(opt);
  opt.jobs = 3;
  const auto c = bench(opt);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].score_count, b[i].score_count);
    EXPECT_EQ(a[i].score_count, c[i].score_count);
    EXPECT_EQ(a[i].score_count, score_count(a[i].strategy, a[i].n));
  }
}

TEST(Bench, OomGuardSkipsAndContinues) {
  BenchOptions opt;
  opt.pool_sizes = {500};
  opt.queries = 2;
  opt.repetitions = 1;
  opt.dim = 4;
  opt.memory_budget = 100000;  // below MMR's 998,000-byte estimate
  const auto rows = bench(opt);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[0].skipped);
  EXPECT_TRUE(rows[1].skipped);
  EXPECT_FALSE(rows[2].skipped);
  const auto csv = cost_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "strategy,n,score_count,est_bytes,measured_bytes,t_construct_ms,"
            "t_inference_ms,queries,reps");
  EXPECT_NE(csv.find("mmr,500,124750,998000,skipped (OOM-guard)"), std::string::npos) << csv;
}

double prep_ms(const Pool& pool, Strategy s, std::size_t reps) {
  BenchOptions opt;
  opt.repetitions = reps;
  return bench_cell(pool, {}, s, opt).t_construct_ms;
}

// Quadratic vs linear preparation growth when the pool doubles.
TEST(Bench, PreparationGrowth) {
  const Pool small = synthetic_pool(2000, 32, 3);
  const Pool large = synthetic_pool(4000, 32, 3);
  const double mmr_ratio =
      prep_ms(large, Strategy::kMmr, 3) / prep_ms(small, Strategy::kMmr, 3);
  EXPECT_GT(mmr_ratio, 2.0);

  const Pool dl_small = synthetic_pool(200000, 2, 4);
  const Pool dl_large = synthetic_pool(400000, 2, 4);
  const double dl_ratio =
      prep_ms(dl_large, Strategy::kDlMmr, 21) / prep_ms(dl_small, Strategy::kDlMmr, 21);
  EXPECT_LT(dl_ratio, 3.0);
}

}  // namespace
}  // namespace dlmmr
