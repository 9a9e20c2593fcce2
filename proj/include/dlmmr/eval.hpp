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

// Summary scoring: ROUGE-1/2/L F1, compression-ratio drift (delta CR) and
// paired bootstrap resampling for significance.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "dlmmr/common.hpp"
#include "dlmmr/parallel.hpp"
#include "dlmmr/text.hpp"

namespace dlmmr {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

namespace detail {

// F1 from counts: 2m / (h + r), which equals 2PR / (P + R) and is exact for
// small integer inputs.
inline RougeScore score_from_counts(std::size_t match, std::size_t hyp,
                                    std::size_t ref) {
  RougeScore s;
  if (hyp > 0) s.precision = static_cast<double>(match) / static_cast<double>(hyp);
  if (ref > 0) s.recall = static_cast<double>(match) / static_cast<double>(ref);
  if (match > 0) {
    s.f1 = 2.0 * static_cast<double>(match) / static_cast<double>(hyp + ref);
  }
  return s;
}

inline std::unordered_map<std::string, std::size_t> ngram_counts(
    const std::vector<std::string>& toks, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (std::size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += toks[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace detail

inline RougeScore rouge_n(const std::vector<std::string>& hyp,
                          const std::vector<std::string>& ref, std::size_t n) {
  if (n == 0) throw InputError("rouge_n: n must be >= 1");
  const auto h = detail::ngram_counts(hyp, n);
  const auto r = detail::ngram_counts(ref, n);
  std::size_t match = 0;
  for (const auto& [gram, count] : h) {
    auto it = r.find(gram);
    if (it != r.end()) match += std::min(count, it->second);
  }
  const std::size_t hyp_total = hyp.size() >= n ? hyp.size() - n + 1 : 0;
  const std::size_t ref_total = ref.size() >= n ? ref.size() - n + 1 : 0;
  return detail::score_from_counts(match, hyp_total, ref_total);
}

inline RougeScore rouge_n(std::string_view hypothesis, std::string_view reference,
                          std::size_t n) {
  return rouge_n(rouge_tokens(hypothesis), rouge_tokens(reference), n);
}

inline std::size_t lcs_length(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline RougeScore rouge_l(const std::vector<std::string>& hyp,
                          const std::vector<std::string>& ref) {
  return detail::score_from_counts(lcs_length(hyp, ref), hyp.size(), ref.size());
}

inline RougeScore rouge_l(std::string_view hypothesis, std::string_view reference) {
  return rouge_l(rouge_tokens(hypothesis), rouge_tokens(reference));
}

// ---------------------------------------------------------------------------

struct GenerationRecord {
  std::string source;
  std::string gold;
  std::string hypothesis;
};

struct InstanceMetrics {
  double r1 = 0.0, r2 = 0.0, rl = 0.0;  // F1 x 100
  double gen_cr = 0.0, gold_cr = 0.0;
  double delta_cr = 0.0;  // (gen_cr - gold_cr) x 100
};

inline InstanceMetrics score_instance(const GenerationRecord& rec) {
  const std::size_t src = word_count(rec.source);
  if (src == 0) throw InputError("generation record has an empty source");
  const std::size_t gold = word_count(rec.gold);
  const std::size_t hyp = word_count(rec.hypothesis);
  const auto h = rouge_tokens(rec.hypothesis);
  const auto g = rouge_tokens(rec.gold);
  InstanceMetrics m;
  m.r1 = rouge_n(h, g, 1).f1 * 100.0;
  m.r2 = rouge_n(h, g, 2).f1 * 100.0;
  m.rl = rouge_l(h, g).f1 * 100.0;
  m.gen_cr = static_cast<double>(hyp) / static_cast<double>(src);
  m.gold_cr = static_cast<double>(gold) / static_cast<double>(src);
  m.delta_cr = (static_cast<double>(hyp) - static_cast<double>(gold)) * 100.0 /
               static_cast<double>(src);
  return m;
}

// Macro average of per-record CR differences, in percentage points.
inline double delta_cr(std::span<const GenerationRecord> records) {
  if (records.empty()) throw InputError("delta_cr: no records");
  double sum = 0.0;
  for (const auto& r : records) sum += score_instance(r).delta_cr;
  return sum / static_cast<double>(records.size());
}

// ---------------------------------------------------------------------------
// Paired bootstrap: resample item indices with replacement and count how
// often system A fails to beat B (mean(a) <= mean(b)). Resamples are drawn
// in fixed-size batches, each with its own seeded generator, so the p-value
// does not depend on `jobs`.

inline constexpr std::size_t kDefaultBootstrapSamples = 100000;

inline double paired_bootstrap(std::span<const double> a, std::span<const double> b,
                               std::size_t samples = kDefaultBootstrapSamples,
                               std::uint64_t seed = 42, std::size_t jobs = 1) {
  if (a.size() != b.size()) {
    throw InputError("paired_bootstrap: length mismatch (" +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw InputError("paired_bootstrap: need at least 2 items");
  if (samples < 1) throw InputError("paired_bootstrap: samples must be >= 1");
  const std::size_t m = a.size();
  std::vector<double> diff(m);
  for (std::size_t i = 0; i < m; ++i) diff[i] = a[i] - b[i];

  constexpr std::size_t kBatch = 1000;
  const std::size_t batches = (samples + kBatch - 1) / kBatch;
  std::vector<std::size_t> fails(batches, 0);
  parallel_for(batches, jobs, [&](std::size_t bi) {
    std::mt19937_64 rng(mix64(seed) ^ mix64(bi + 1));
    const std::size_t count = std::min(kBatch, samples - bi * kBatch);
    for (std::size_t s = 0; s < count; ++s) {
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) sum += diff[uniform_index(rng, m)];
      if (sum <= 0.0) ++fails[bi];
    }
  });
  std::size_t total = 0;
  for (auto f : fails) total += f;
  return static_cast<double>(total) / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------

struct EvalReport {
  std::size_t count = 0;
  double r1 = 0.0, r2 = 0.0, rl = 0.0;  // mean F1 x 100
  double delta_cr = 0.0;
  std::vector<InstanceMetrics> per_instance;
  // Present when compared against a baseline run: one-sided p per metric.
  std::map<std::string, double> p_values;
};

inline EvalReport evaluate(std::span<const GenerationRecord> records,
                           std::size_t jobs = 1) {
  if (records.empty()) throw InputError("evaluate: no generation records");
  EvalReport rep;
  rep.count = records.size();
  rep.per_instance.resize(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    rep.per_instance[i] = score_instance(records[i]);
  });
  for (const auto& m : rep.per_instance) {
    rep.r1 += m.r1;
    rep.r2 += m.r2;
    rep.rl += m.rl;
    rep.delta_cr += m.delta_cr;
  }
  const double n = static_cast<double>(rep.count);
  rep.r1 /= n;
  rep.r2 /= n;
  rep.rl /= n;
  rep.delta_cr /= n;
  return rep;
}

inline std::vector<GenerationRecord> read_generations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open generations " + path.string());
  std::vector<GenerationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + "malformed JSON (" + e.what() + ")");
    }
    GenerationRecord r;
    for (auto [key, field] : {std::pair{"source", &r.source},
                              std::pair{"gold", &r.gold},
                              std::pair{"hypothesis", &r.hypothesis}}) {
      if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string()) {
        throw InputError(where + "missing string field \"" + key + "\"");
      }
      *field = obj[key].get<std::string>();
    }
    if (word_count(r.source) == 0) throw InputError(where + "empty source");
    out.push_back(std::move(r));
  }
  return out;
}

// Fills report.p_values with the probability that `report` fails to beat
// `baseline` on each of r1, r2, rl.
inline void compare_with_baseline(EvalReport& report, const EvalReport& baseline,
                                  std::size_t samples, std::uint64_t seed,
                                  std::size_t jobs = 1) {
  if (report.count != baseline.count) {
    throw InputError("baseline has " + std::to_string(baseline.count) +
                     " records, run has " + std::to_string(report.count));
  }
  auto column = [](const EvalReport& r, double InstanceMetrics::*field) {
    std::vector<double> v;
    v.reserve(r.per_instance.size());
    for (const auto& m : r.per_instance) v.push_back(m.*field);
    return v;
  };
  for (auto [name, field] : {std::pair{"r1", &InstanceMetrics::r1},
                             std::pair{"r2", &InstanceMetrics::r2},
                             std::pair{"rl", &InstanceMetrics::rl}}) {
    report.p_values[name] = paired_bootstrap(column(report, field),
                                             column(baseline, field), samples,
                                             seed, jobs);
  }
}

inline nlohmann::json report_json(const EvalReport& rep, const nlohmann::json& config) {
  nlohmann::json j;
  j["count"] = rep.count;
  j["r1"] = rep.r1;
  j["r2"] = rep.r2;
  j["rl"] = rep.rl;
  j["delta_cr"] = rep.delta_cr;
  if (!rep.p_values.empty()) j["p_values"] = rep.p_values;
  j["config"] = config;
  return j;
}

inline std::string report_csv(const EvalReport& rep) {
  std::string out = "id,r1,r2,rl,gen_cr,gold_cr\n";
  char buf[256];
  for (std::size_t i = 0; i < rep.per_instance.size(); ++i) {
    const auto& m = rep.per_instance[i];
    std::snprintf(buf, sizeof buf, "%zu,%.4f,%.4f,%.4f,%.6f,%.6f\n", i, m.r1, m.r2,
                  m.rl, m.gen_cr, m.gold_cr);
    out += buf;
  }
  return out;
}

// Writes <report_path> (JSON) and the same path with a .csv extension.
inline void write_report(const EvalReport& rep, const std::filesystem::path& report_path,
                         const nlohmann::json& config) {
  {
    std::ofstream out(report_path);
    if (!out) throw InputError("cannot write " + report_path.string());
    out << report_json(rep, config).dump(2) << "\n";
  }
  auto csv_path = report_path;
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path);
  if (!csv) throw InputError("cannot write " + csv_path.string());
  csv << report_csv(rep);
}

inline EvalReport evaluate_run(const std::filesystem::path& generations_file,
                               const std::filesystem::path& report_path,
                               nlohmann::json config = nlohmann::json::object(),
                               std::size_t jobs = 1) {
  const auto records = read_generations(generations_file);
  EvalReport rep = evaluate(records, jobs);
  config["generations"] = generations_file.generic_string();
  write_report(rep, report_path, config);
  return rep;
}

}  // namespace dlmmr
