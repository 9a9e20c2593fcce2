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

// Command-line surface. run_cli() is the whole program minus main() so the
// test suites can drive every subcommand in-process.
//
// Exit codes: 0 success, 1 input error, 2 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dlmmr/common.hpp"
#include "dlmmr/costbench.hpp"
#include "dlmmr/eval.hpp"
#include "dlmmr/pool.hpp"
#include "dlmmr/prompt.hpp"
#include "dlmmr/selection.hpp"
#include "dlmmr/sweep.hpp"

namespace dlmmr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInternal = 2;

namespace fs = std::filesystem;

inline nlohmann::json config_json(const SelectionConfig& c) {
  nlohmann::json j;
  j["strategy"] = std::string(to_string(c.strategy));
  j["mode"] = std::string(to_string(c.mode));
  j["lambda"] = c.lambda;
  j["k"] = c.k;
  j["seed"] = c.seed;
  j["candidate_limit"] = c.candidate_limit ? nlohmann::json(*c.candidate_limit)
                                           : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json selection_json(std::size_t query_id, const SelectionResult& r) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : r.steps) scores.push_back(s.score);
  return {{"query_id", query_id}, {"exemplar_ids", r.selected}, {"scores", scores}};
}

inline void write_lines(const fs::path& path, const std::vector<nlohmann::json>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << "\n";
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

// Reads selections JSONL into exemplar-id lists indexed by query_id.
inline std::vector<std::vector<RecordId>> read_selections(const fs::path& path,
                                                          std::size_t query_count) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open selections " + path.string());
  std::vector<std::vector<RecordId>> out(query_count);
  std::vector<char> seen(query_count, 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      const auto q = j.at("query_id").get<std::size_t>();
      if (q >= query_count) throw InputError(where + "query_id out of range");
      out[q] = j.at("exemplar_ids").get<std::vector<RecordId>>();
      seen[q] = 1;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + e.what());
    }
  }
  for (std::size_t q = 0; q < query_count; ++q) {
    if (!seen[q]) throw InputError(path.string() + ": no selection for query " + std::to_string(q));
  }
  return out;
}

struct SelectArgs {
  std::string pool, queries, query_embeddings, out;
  std::string strategy = "dl-mmr", mode = "tgt";
  std::optional<double> lambda;
  std::size_t k = kDefaultExemplarCount;
  std::uint64_t seed = kDefaultSeed;
  std::size_t jobs = 1;
  std::optional<std::size_t> candidate_limit;

  SelectionConfig config() const {
    SelectionConfig c;
    c.strategy = parse_strategy(strategy);
    c.mode = parse_length_mode(mode);
    c.lambda = lambda ? *lambda : default_lambda(c.strategy, c.mode);
    c.k = k;
    c.seed = seed;
    c.candidate_limit = candidate_limit;
    return c;
  }
};

inline void add_selection_flags(CLI::App* cmd, SelectArgs& a) {
  cmd->add_option("--pool", a.pool, "pool manifest (from build-pool)")->required();
  cmd->add_option("--queries", a.queries, "query JSONL {\"source\", \"gold\"?}")->required();
  cmd->add_option("--query-embeddings", a.query_embeddings,
                  "EMB1 file aligned with --queries")->required();
  cmd->add_option("--strategy", a.strategy, "random | nn | mmr | dl-mmr")
      ->capture_default_str();
  cmd->add_option("--mode", a.mode, "length mode for dl-mmr: tgt | src | cr")
      ->capture_default_str();
  cmd->add_option("--lambda", a.lambda,
                  "trade-off weight (default 0.1 for dl-mmr tgt/cr, 0.5 for dl-mmr src and mmr)");
  cmd->add_option("--k", a.k, "exemplars per query")->capture_default_str();
  cmd->add_option("--seed", a.seed, "seed for all randomness")->capture_default_str();
  cmd->add_option("--jobs", a.jobs, "worker threads")->capture_default_str();
  cmd->add_option("--candidate-limit", a.candidate_limit,
                  "restrict greedy candidates to the nearest N records");
}

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot exemplar selection with length-diverse MMR", "dlmmr"};
  app.require_subcommand(1);

  // build-pool
  std::string bp_dataset, bp_format, bp_embeddings, bp_out;
  auto* build = app.add_subcommand("build-pool", "dataset + embeddings -> pool manifest");
  build->add_option("--dataset", bp_dataset, "JSONL or TSV dataset")->required();
  build->add_option("--format", bp_format, "jsonl | tsv (default: by extension)");
  build->add_option("--embeddings", bp_embeddings, "EMB1 embedding file")->required();
  build->add_option("--out", bp_out, "manifest path")->required();

  // select
  SelectArgs sel;
  auto* select = app.add_subcommand("select", "choose exemplars for each query");
  add_selection_flags(select, sel);
  select->add_option("--out", sel.out, "selections JSONL")->required();

  // prompt
  std::string pr_pool, pr_queries, pr_selections, pr_out;
  std::optional<std::size_t> pr_k;
  auto* prompt = app.add_subcommand("prompt", "selections -> few-shot prompts");
  prompt->add_option("--pool", pr_pool, "pool manifest");
  prompt->add_option("--queries", pr_queries, "query JSONL")->required();
  prompt->add_option("--selections", pr_selections, "selections JSONL");
  prompt->add_option("--k", pr_k, "exemplars per prompt (0 = zero-shot)");
  prompt->add_option("--out", pr_out, "prompts JSONL")->required();

  // evaluate
  std::string ev_generations, ev_out, ev_baseline;
  std::size_t ev_samples = kDefaultBootstrapSamples, ev_jobs = 1;
  std::uint64_t ev_seed = kDefaultSeed;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score generations against gold");
  evaluate_cmd->add_option("--generations", ev_generations,
                           "JSONL {\"source\", \"gold\", \"hypothesis\"}")->required();
  evaluate_cmd->add_option("--out", ev_out, "report JSON (CSV written alongside)")->required();
  evaluate_cmd->add_option("--baseline", ev_baseline,
                           "generations of a baseline system for paired bootstrap");
  evaluate_cmd->add_option("--samples", ev_samples, "bootstrap resamples")->capture_default_str();
  evaluate_cmd->add_option("--seed", ev_seed, "bootstrap seed")->capture_default_str();
  evaluate_cmd->add_option("--jobs", ev_jobs, "worker threads")->capture_default_str();

  // bench
  BenchOptions bo;
  std::vector<std::string> bench_strategies{"nn", "mmr", "dl-mmr"};
  std::string bench_mode = "tgt", bench_out;
  std::optional<std::uint64_t> analytic_n;
  auto* bench_cmd = app.add_subcommand("bench", "measure preparation and inference cost");
  bench_cmd->add_option("--sizes", bo.pool_sizes, "pool sizes")->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--strategies", bench_strategies, "strategies")->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--queries", bo.queries, "queries per batch")->capture_default_str();
  bench_cmd->add_option("--reps", bo.repetitions, "repetitions (median)")->capture_default_str();
  bench_cmd->add_option("--dim", bo.dim, "synthetic embedding dimension")->capture_default_str();
  bench_cmd->add_option("--k", bo.k, "exemplars per query")->capture_default_str();
  bench_cmd->add_option("--lambda", bo.lambda, "trade-off weight")->capture_default_str();
  bench_cmd->add_option("--mode", bench_mode, "dl-mmr length mode")->capture_default_str();
  bench_cmd->add_option("--seed", bo.seed, "seed")->capture_default_str();
  bench_cmd->add_option("--jobs", bo.jobs, "worker threads")->capture_default_str();
  bench_cmd->add_option("--budget-bytes", bo.memory_budget,
                        "skip cells whose preparation estimate exceeds this")
      ->capture_default_str();
  bench_cmd->add_option("--analytic-n", analytic_n,
                        "also print the analytic cost comparison at this pool size");
  bench_cmd->add_option("--out", bench_out, "CSV path (default: stdout)");

  // sweep-lambda
  SelectArgs sw;
  std::vector<double> sw_lambdas = default_lambda_grid();
  std::string sw_out_dir, sw_hypotheses;
  auto* sweep_cmd = app.add_subcommand("sweep-lambda", "run selection over a lambda grid");
  add_selection_flags(sweep_cmd, sw);
  sweep_cmd->add_option("--lambdas", sw_lambdas, "lambda grid")->delimiter(',');
  sweep_cmd->add_option("--out-dir", sw_out_dir, "output directory")->required();
  sweep_cmd->add_option("--hypotheses", sw_hypotheses,
                        "generations JSONL per lambda; '{lambda}' is replaced by the value");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*build) {
      const fs::path dataset(bp_dataset), emb(bp_embeddings), manifest(bp_out);
      const auto format =
          bp_format.empty() ? guess_dataset_format(dataset) : parse_dataset_format(bp_format);
      const Pool pool = attach_embeddings(ingest_dataset(dataset, format), emb);
      const auto base = fs::absolute(manifest).parent_path();
      write_manifest(manifest, pool, fs::proximate(fs::absolute(dataset), base), format,
                     fs::proximate(fs::absolute(emb), base));
      for (const auto& d : pool.diagnostics()) err << "note: " << d << "\n";
      out << nlohmann::json{{"n", pool.size()},
                            {"dim", pool.dim()},
                            {"length_stats", stats_json(pool)},
                            {"manifest", manifest.generic_string()}}
                 .dump()
          << "\n";
      return kExitOk;
    }

    if (*select) {
      const auto cfg = sel.config();
      const Pool pool = load_pool(sel.pool);
      const auto queries = load_queries(sel.queries, sel.query_embeddings);
      Selector selector(pool, cfg, {sel.jobs});
      const auto results = selector.select_all(queries, sel.jobs);
      std::vector<nlohmann::json> rows;
      for (std::size_t i = 0; i < results.size(); ++i) rows.push_back(selection_json(i, results[i]));
      write_lines(sel.out, rows);
      auto echo = config_json(cfg);
      echo["queries"] = queries.size();
      echo["pool_size"] = pool.size();
      echo["prep_score_count"] =
          selector.prep_counter().pairwise_embedding + selector.prep_counter().length_reads;
      out << echo.dump() << "\n";
      return kExitOk;
    }

    if (*prompt) {
      std::vector<QueryInstance> queries;
      {
        std::ifstream in(pr_queries);
        if (!in) throw InputError("cannot open queries " + pr_queries);
        // Prompts need only the text, so embeddings are not required here.
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          try {
            auto j = nlohmann::json::parse(line);
            queries.push_back({j.at("source").get<std::string>(), 0, {}, std::nullopt});
          } catch (const nlohmann::json::exception& e) {
            throw InputError(pr_queries + ":" + std::to_string(line_no) + ": " + e.what());
          }
        }
      }
      const bool zero_shot = pr_k && *pr_k == 0;
      std::vector<std::vector<RecordId>> ids(queries.size());
      Pool pool;
      if (!zero_shot) {
        if (pr_pool.empty() || pr_selections.empty()) {
          throw InputError("prompt: --pool and --selections are required unless --k 0");
        }
        pool = load_pool(pr_pool);
        ids = read_selections(pr_selections, queries.size());
        if (pr_k) {
          for (auto& v : ids) {
            if (v.size() < *pr_k) {
              throw InputError("selection has " + std::to_string(v.size()) +
                               " exemplars, --k asks for " + std::to_string(*pr_k));
            }
            v.resize(*pr_k);
          }
        }
      }
      std::vector<nlohmann::json> rows;
      for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto bundle = build_prompt(pool, ids[i], queries[i].source);
        rows.push_back({{"query_id", i}, {"prompt", bundle.prompt_text}});
      }
      write_lines(pr_out, rows);
      out << nlohmann::json{{"prompts", rows.size()},
                            {"k", zero_shot ? 0 : (ids.empty() ? 0 : ids.front().size())}}
                 .dump()
          << "\n";
      return kExitOk;
    }

    if (*evaluate_cmd) {
      const auto records = read_generations(ev_generations);
      EvalReport rep = evaluate(records, ev_jobs);
      nlohmann::json config{{"generations", ev_generations},
                            {"tokenizer", "lowercase, split on whitespace and punctuation"},
                            {"delta_cr", "macro mean of per-record (gen_cr - gold_cr) x 100"}};
      if (!ev_baseline.empty()) {
        const EvalReport base = evaluate(read_generations(ev_baseline), ev_jobs);
        compare_with_baseline(rep, base, ev_samples, ev_seed, ev_jobs);
        config["baseline"] = ev_baseline;
        config["bootstrap_samples"] = ev_samples;
        config["seed"] = ev_seed;
      }
      write_report(rep, ev_out, config);
      out << report_json(rep, config).dump() << "\n";
      return kExitOk;
    }

    if (*bench_cmd) {
      bo.strategies.clear();
      for (const auto& s : bench_strategies) bo.strategies.push_back(parse_strategy(s));
      bo.mode = parse_length_mode(bench_mode);
      if (analytic_n) out << analytic_report(*analytic_n, sizeof(double));
      const auto csv = cost_csv(bench(bo));
      if (bench_out.empty()) {
        out << csv;
      } else {
        write_text(bench_out, csv);
      }
      return kExitOk;
    }

    if (*sweep_cmd) {
      const auto cfg = sw.config();
      const Pool pool = load_pool(sw.pool);
      const auto queries = load_queries(sw.queries, sw.query_embeddings);
      auto rows = sweep_lambda(pool, queries, cfg, sw_lambdas, sw.jobs);
      const fs::path dir(sw_out_dir);
      fs::create_directories(dir);
      std::vector<std::string> files;
      for (auto& row : rows) {
        const std::string name = "selections_lambda_" + format_lambda(row.lambda) + ".jsonl";
        std::vector<nlohmann::json> lines;
        for (std::size_t i = 0; i < row.selections.size(); ++i) {
          lines.push_back(selection_json(i, row.selections[i]));
        }
        write_lines(dir / name, lines);
        files.push_back(name);
        if (!sw_hypotheses.empty()) {
          std::string path = sw_hypotheses;
          const auto at = path.find("{lambda}");
          if (at != std::string::npos) path.replace(at, 8, format_lambda(row.lambda));
          if (fs::exists(path)) row.eval = evaluate(read_generations(path), sw.jobs);
        }
      }
      write_text(dir / "sweep.csv", sweep_csv(rows, cfg, queries.size(), files));
      auto echo = config_json(cfg);
      echo.erase("lambda");
      echo["lambdas"] = sw_lambdas;
      echo["rows"] = rows.size();
      echo["csv"] = (dir / "sweep.csv").generic_string();
      out << echo.dump() << "\n";
      return kExitOk;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(std::move(args), std::cout, std::cerr);
}

}  // namespace dlmmr::cli
