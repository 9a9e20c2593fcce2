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
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "dlmmr/pool.hpp"
#include "oracles.hpp"

namespace dlmmr {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("dlmmr_pool_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(WordCount, Basics) {
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(word_count("   \t\n"), 0u);
  EXPECT_EQ(word_count("Child mortality rates are dropping."), 5u);
  EXPECT_EQ(word_count("a  b\tc"), 3u);
  EXPECT_EQ(word_count("  leading and trailing  "), 3u);
}

TEST(Ingest, JsonlComputesLengths) {
  std::istringstream in(R"({"source":"a b c d","target":"a b"})" "\n");
  const Pool pool = ingest_dataset(in, DatasetFormat::kJsonl);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool[0].src_len, 4u);
  EXPECT_EQ(pool[0].tgt_len, 2u);
  EXPECT_EQ(pool[0].cr, 0.5);
  EXPECT_EQ(pool.dim(), 0u);
}

TEST(Ingest, EmptyFileGivesEmptyPool) {
  std::istringstream in("");
  const Pool pool = ingest_dataset(in, DatasetFormat::kJsonl);
  EXPECT_EQ(pool.size(), 0u);
  EXPECT_EQ(pool.length_stats(LengthMode::kCr), (LengthRange{0.0, 0.0}));
}

TEST(Ingest, MissingTargetNamesLine) {
  std::istringstream in(
      R"({"source":"a b","target":"a"})" "\n"
      R"({"source":"c d"})" "\n");
  try {
    ingest_dataset(in, DatasetFormat::kJsonl, "data.jsonl");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("data.jsonl:2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("target"), std::string::npos);
  }
}

TEST(Ingest, MalformedJsonAndEmptySourceRejected) {
  std::istringstream bad("{not json}\n");
  EXPECT_THROW(ingest_dataset(bad, DatasetFormat::kJsonl), InputError);
  std::istringstream empty_src(R"({"source":"   ","target":"x"})" "\n");
  EXPECT_THROW(ingest_dataset(empty_src, DatasetFormat::kJsonl), InputError);
}

TEST(Ingest, EmptyTargetIsFlaggedNotRejected) {
  std::istringstream in(R"({"source":"a b","target":""})" "\n");
  const Pool pool = ingest_dataset(in, DatasetFormat::kJsonl);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool[0].tgt_len, 0u);
  EXPECT_EQ(pool[0].cr, 0.0);
  ASSERT_EQ(pool.diagnostics().size(), 1u);
}

TEST(Ingest, StoredCrMustMatch) {
  std::istringstream ok(R"({"source":"a b c","target":"a","cr":0.3333333333333333})" "\n");
  EXPECT_EQ(ingest_dataset(ok, DatasetFormat::kJsonl).size(), 1u);
  std::istringstream bad(R"({"source":"a b c","target":"a","cr":0.33})" "\n");
  EXPECT_THROW(ingest_dataset(bad, DatasetFormat::kJsonl), InputError);
}

TEST(Ingest, Tsv) {
  std::istringstream in("one two three\tone\nfour five\tfour five\n");
  const Pool pool = ingest_dataset(in, DatasetFormat::kTsv);
  ASSERT_EQ(pool.size(), 2u);
  EXPECT_EQ(pool[1].cr, 1.0);
  std::istringstream bad("no tab here\n");
  EXPECT_THROW(ingest_dataset(bad, DatasetFormat::kTsv), InputError);
}

TEST(Embeddings, AttachSetsDim) {
  std::istringstream in(R"({"source":"a","target":"a"})" "\n"
                        R"({"source":"b c","target":"b"})" "\n"
                        R"({"source":"d e f","target":"d"})" "\n");
  const Pool bare = ingest_dataset(in, DatasetFormat::kJsonl);
  EmbeddingMatrix m{3, 4, std::vector<float>(12, 0.5f)};
  const Pool pool = attach_embeddings(bare, m);
  EXPECT_EQ(pool.dim(), 4u);
  EXPECT_EQ(pool.embedding(2).size(), 4u);

  EmbeddingMatrix short_m{2, 4, std::vector<float>(8, 0.5f)};
  try {
    attach_embeddings(bare, short_m);
    FAIL();
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("expected 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("found 2"), std::string::npos) << msg;
  }
}

TEST(Embeddings, EmptyPoolEmptyFile) {
  const auto dir = temp_dir("empty");
  { std::ofstream(dir / "e.emb", std::ios::binary); }
  const Pool pool = attach_embeddings(Pool{}, dir / "e.emb");
  EXPECT_EQ(pool.size(), 0u);
  EXPECT_EQ(pool.dim(), 0u);
}

TEST(Embeddings, BinaryLayoutIsLittleEndian) {
  EmbeddingMatrix m{1, 2, {1.0f, -2.0f}};
  const std::string bytes = encode_embeddings(m);
  ASSERT_EQ(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(0, 4), "EMB1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2);
  // 1.0f == 0x3f800000
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[15]), 0x3f);
  const auto back = decode_embeddings(bytes);
  EXPECT_EQ(back.values, m.values);
  EXPECT_THROW(decode_embeddings(bytes.substr(0, 16)), InputError);
  EXPECT_THROW(decode_embeddings("EMB2xxxxxxxx"), InputError);
}

TEST(TestEmbedder, DeterministicUnitNorm) {
  const auto a = test_embedder("the quick brown fox", 16, 7);
  const auto b = test_embedder("the quick brown fox", 16, 7);
  EXPECT_EQ(a, b);
  double norm = 0.0;
  for (float x : a) norm += static_cast<double>(x) * x;
  EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-6);
  EXPECT_NE(test_embedder("the quick brown fox", 16, 8), a);
  const auto empty = test_embedder("", 8, 1);
  double en = 0.0;
  for (float x : empty) en += static_cast<double>(x) * x;
  EXPECT_NEAR(std::sqrt(en), 1.0, 1e-6);
  EXPECT_THROW(test_embedder("x", 0, 1), InputError);
}

Pool pool_with_targets(const std::vector<std::size_t>& tgt_lens, std::size_t src = 20) {
  PoolBuilder b;
  for (auto t : tgt_lens) b.add(testing::words(src), testing::words(t));
  return std::move(b).build();
}

TEST(SampleByLength, ForcedSet) {
  std::vector<std::size_t> lens;
  for (int i = 0; i < 8; ++i) lens.push_back(10);
  for (int i = 0; i < 12; ++i) lens.push_back(3 + i % 5);
  const Pool pool = pool_with_targets(lens);
  auto ids = sample_by_length(pool, LengthMode::kTgtWords, 10, 0, 8, 42);
  ASSERT_EQ(ids.size(), 8u);
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(ids[i], i);
}

TEST(SampleByLength, DeterministicAndUniformWithoutReplacement) {
  std::vector<std::size_t> lens(50, 10);
  const Pool pool = pool_with_targets(lens);
  const auto a = sample_by_length(pool, LengthMode::kTgtWords, 10, 0, 8, 3);
  const auto b = sample_by_length(pool, LengthMode::kTgtWords, 10, 0, 8, 3);
  EXPECT_EQ(a, b);
  std::set<RecordId> unique(a.begin(), a.end());
  EXPECT_EQ(unique.size(), 8u);
}

TEST(SampleByLength, NotEnoughEligibleReportsCount) {
  // cr values 0.1 .. 0.4 and 0.6 .. 0.9, none in [0.45, 0.55].
  std::vector<std::size_t> lens{2, 4, 6, 8, 12, 14, 16, 18};
  const Pool pool = pool_with_targets(lens);
  try {
    sample_by_length(pool, LengthMode::kCr, 0.5, 0.05, 1, 1);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("only 0 eligible"), std::string::npos) << e.what();
  }
  // Boundary: cr 0.45 (9/20) counts as inside +-0.05 of 0.5.
  const Pool edge = pool_with_targets({9});
  EXPECT_EQ(sample_by_length(edge, LengthMode::kCr, 0.5, 0.05, 1, 1).size(), 1u);
}

TEST(PoolProperties, LengthStatsMatchBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Pool pool = testing::random_pool(rng, 1 + rng() % 40, 3);
    for (LengthMode mode : {LengthMode::kTgtWords, LengthMode::kSrcWords, LengthMode::kCr}) {
      double lo = pool[0].length(mode), hi = lo;
      for (const auto& r : pool.records()) {
        lo = std::min(lo, r.length(mode));
        hi = std::max(hi, r.length(mode));
        EXPECT_EQ(r.cr, static_cast<double>(r.tgt_len) / static_cast<double>(r.src_len));
      }
      EXPECT_EQ(pool.length_stats(mode).min, lo);
      EXPECT_EQ(pool.length_stats(mode).max, hi);
    }
    for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_EQ(pool[i].id, i);
  }
}

TEST(PoolProperties, SaveLoadRoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  const auto dir = temp_dir("roundtrip");
  for (int trial = 0; trial < 5; ++trial) {
    PoolBuilder b;
    const std::size_t n = 1 + rng() % 25;
    for (std::size_t i = 0; i < n; ++i) {
      // Punctuation, quotes and unicode survive the JSONL round trip.
      b.add("Src \"q\" \xc3\xa9t\xc3\xa9, " + testing::words(1 + rng() % 9),
            testing::words(rng() % 5), testing::random_vector(rng, 6));
    }
    const Pool pool = std::move(b).build();
    save_pool(pool, dir / "pool.json");
    const Pool back = load_pool(dir / "pool.json");
    EXPECT_TRUE(pool == back);
  }
}

TEST(PoolProperties, ManifestStatsAreVerified) {
  const auto dir = temp_dir("tamper");
  PoolBuilder b;
  b.add("a b c", "a", {1.0f, 0.0f});
  b.add("a b", "a b", {0.0f, 1.0f});
  save_pool(std::move(b).build(), dir / "p.json");
  std::ifstream in(dir / "p.json");
  auto j = nlohmann::json::parse(in);
  j["length_stats"]["tgt"]["max"] = 7;
  std::ofstream(dir / "p.json") << j.dump();
  EXPECT_THROW(load_pool(dir / "p.json"), InputError);
  EXPECT_THROW(load_pool(dir / "missing.json"), InputError);
}

}  // namespace
}  // namespace dlmmr
