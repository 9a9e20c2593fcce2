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

// Few-shot prompt assembly for sentence summarization. Each exemplar
// becomes a completed instruction block; the query gets an open one.
//
//   Sentence:\n{src}\nSummary of the sentence without the less important
//   words would be:\n{tgt}\n\n   (per exemplar, in selection order)
//   Sentence:\n{query}\nSummary of ... would be:\n   (open block)

#include <string>
#include <string_view>
#include <vector>

#include "dlmmr/common.hpp"
#include "dlmmr/pool.hpp"
#include "dlmmr/text.hpp"

namespace dlmmr {

inline constexpr std::string_view kSentenceLabel = "Sentence:\n";
inline constexpr std::string_view kSummaryCue =
    "\nSummary of the sentence without the less important words would be:\n";

struct PromptExemplar {
  RecordId id = 0;
  std::string source;
  std::string target;
};

struct PromptBundle {
  std::string prompt_text;
  std::vector<RecordId> exemplar_ids;
  std::string query_source;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline void append_open_block(std::string& out, std::string_view source) {
  out += kSentenceLabel;
  out += trim(source);
  out += kSummaryCue;
}

}  // namespace detail

// An empty exemplar list yields the zero-shot prompt (open block only).
inline PromptBundle build_prompt(const std::vector<PromptExemplar>& exemplars,
                                 std::string_view query_source) {
  PromptBundle b;
  b.query_source = std::string(query_source);
  for (const auto& e : exemplars) {
    if (word_count(e.target) == 0) {
      throw InputError("exemplar " + std::to_string(e.id) + " has no target text");
    }
    detail::append_open_block(b.prompt_text, e.source);
    b.prompt_text += detail::trim(e.target);
    b.prompt_text += "\n\n";
    b.exemplar_ids.push_back(e.id);
  }
  detail::append_open_block(b.prompt_text, query_source);
  return b;
}

inline PromptBundle build_prompt(const Pool& pool, const std::vector<RecordId>& ids,
                                 std::string_view query_source) {
  std::vector<PromptExemplar> ex;
  ex.reserve(ids.size());
  for (RecordId id : ids) {
    if (id >= pool.size()) {
      throw InputError("exemplar id " + std::to_string(id) + " is outside the pool");
    }
    ex.push_back({id, pool[id].source, pool[id].target});
  }
  return build_prompt(ex, query_source);
}

}  // namespace dlmmr
