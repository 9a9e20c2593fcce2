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

// Shared vocabulary: error types, length modes, strategies and the
// platform-independent random helpers every seeded component uses.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dlmmr {

// Bad user input: malformed files, contract violations, bad flags.
// The CLI maps this to exit code 1; anything else is exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LengthMode { kTgtWords, kSrcWords, kCr };

enum class Strategy { kRandom, kNn, kMmr, kDlMmr };

inline std::string_view to_string(LengthMode mode) {
  switch (mode) {
    case LengthMode::kTgtWords: return "tgt";
    case LengthMode::kSrcWords: return "src";
    case LengthMode::kCr: return "cr";
  }
  return "?";
}

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kNn: return "nn";
    case Strategy::kMmr: return "mmr";
    case Strategy::kDlMmr: return "dl_mmr";
  }
  return "?";
}

// Accepts both the short CLI spellings and the long names.
inline LengthMode parse_length_mode(std::string_view s) {
  if (s == "tgt" || s == "tgt_words") return LengthMode::kTgtWords;
  if (s == "src" || s == "src_words") return LengthMode::kSrcWords;
  if (s == "cr") return LengthMode::kCr;
  throw InputError("unknown length mode '" + std::string(s) +
                   "' (expected tgt, src or cr)");
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "random") return Strategy::kRandom;
  if (s == "nn") return Strategy::kNn;
  if (s == "mmr") return Strategy::kMmr;
  if (s == "dl_mmr" || s == "dl-mmr" || s == "dlmmr") return Strategy::kDlMmr;
  throw InputError("unknown strategy '" + std::string(s) +
                   "' (expected random, nn, mmr or dl-mmr)");
}

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// std::mt19937_64 output is fixed by the standard, the distributions are
// not. Bounded draws go through this so seeded runs agree across
// standard libraries.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace dlmmr
