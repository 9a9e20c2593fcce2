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

// Lambda sweeps: run one strategy over a grid of trade-off weights and
// summarise the selected exemplars' lengths per weight.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "dlmmr/eval.hpp"
#include "dlmmr/pool.hpp"
#include "dlmmr/selection.hpp"

namespace dlmmr {

// 0.0, 0.1, ..., 1.0 built from integers so each value is the nearest
// double to its decimal.
inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

inline std::string format_lambda(double lambda) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", lambda);
  return buf;
}

struct SweepRow {
  double lambda = 0.0;
  std::vector<SelectionResult> selections;
  double mean_tgt_words = 0.0;   // over all selected exemplars
  double mean_cr = 0.0;
  double mean_tgt_spread = 0.0;  // per query max - min target words, averaged
  std::optional<EvalReport> eval;
};

inline std::vector<SweepRow> sweep_lambda(const Pool& pool,
                                          const std::vector<QueryInstance>& queries,
                                          SelectionConfig base,
                                          const std::vector<double>& lambdas,
                                          std::size_t jobs = 1) {
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) {
      throw InputError("lambda " + std::to_string(l) + " is outside [0, 1]");
    }
  }
  std::vector<SweepRow> rows;
  for (double l : lambdas) {
    SelectionConfig cfg = base;
    cfg.lambda = l;
    Selector selector(pool, cfg);
    SweepRow row;
    row.lambda = l;
    row.selections = selector.select_all(queries, jobs);
    std::size_t picked = 0;
    for (const auto& sel : row.selections) {
      double lo = 0.0, hi = 0.0;
      bool first = true;
      for (RecordId id : sel.selected) {
        const double t = static_cast<double>(pool[id].tgt_len);
        row.mean_tgt_words += t;
        row.mean_cr += pool[id].cr;
        lo = first ? t : std::min(lo, t);
        hi = first ? t : std::max(hi, t);
        first = false;
        ++picked;
      }
      row.mean_tgt_spread += hi - lo;
    }
    if (picked > 0) {
      row.mean_tgt_words /= static_cast<double>(picked);
      row.mean_cr /= static_cast<double>(picked);
    }
    if (!row.selections.empty()) {
      row.mean_tgt_spread /= static_cast<double>(row.selections.size());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, const SelectionConfig& base,
                             std::size_t query_count,
                             const std::vector<std::string>& selection_files) {
  bool with_eval = false;
  for (const auto& r : rows) with_eval = with_eval || r.eval.has_value();
  std::string out =
      "lambda,strategy,mode,k,queries,mean_tgt_words,mean_cr,mean_tgt_spread,selections";
  if (with_eval) out += ",r1,r2,rl,delta_cr";
  out += "\n";
  char buf[512];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%zu,%zu,%.4f,%.6f,%.4f,%s",
                  format_lambda(r.lambda).c_str(),
                  std::string(to_string(base.strategy)).c_str(),
                  std::string(to_string(base.mode)).c_str(), base.k, query_count,
                  r.mean_tgt_words, r.mean_cr, r.mean_tgt_spread,
                  i < selection_files.size() ? selection_files[i].c_str() : "");
    out += buf;
    if (with_eval) {
      if (r.eval) {
        std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f,%.4f", r.eval->r1, r.eval->r2,
                      r.eval->rl, r.eval->delta_cr);
        out += buf;
      } else {
        out += ",,,,";
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace dlmmr
