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

// On-disk fixtures for CLI-level tests: a dataset, its embeddings, and a
// query file with gold targets plus query embeddings.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "dlmmr/costbench.hpp"
#include "dlmmr/pool.hpp"

namespace dlmmr::testing {

struct Workspace {
  std::filesystem::path dir;
  std::filesystem::path dataset, embeddings, manifest, queries, query_embeddings;
};

inline Workspace make_workspace(const std::string& name, std::size_t n,
                                std::size_t query_count, std::size_t dim = 16,
                                std::uint64_t seed = 7) {
  namespace fs = std::filesystem;
  Workspace ws;
  ws.dir = fs::temp_directory_path() / ("dlmmr_ws_" + name);
  fs::remove_all(ws.dir);
  fs::create_directories(ws.dir);
  ws.dataset = ws.dir / "pool.jsonl";
  ws.embeddings = ws.dir / "pool.emb";
  ws.manifest = ws.dir / "manifest.json";
  ws.queries = ws.dir / "queries.jsonl";
  ws.query_embeddings = ws.dir / "queries.emb";

  const Pool pool = synthetic_pool(n, dim, seed);
  {
    std::ofstream out(ws.dataset);
    for (const auto& r : pool.records()) {
      out << nlohmann::json{{"source", r.source}, {"target", r.target}}.dump() << "\n";
    }
  }
  write_embeddings(ws.embeddings, embeddings_of(pool));

  std::mt19937_64 rng(seed + 100);
  EmbeddingMatrix qe{query_count, dim, {}};
  std::ofstream out(ws.queries);
  for (std::size_t i = 0; i < query_count; ++i) {
    const std::string src = synthetic_text(rng, 6 + uniform_index(rng, 20));
    const std::string gold = synthetic_text(rng, 2 + uniform_index(rng, 5));
    out << nlohmann::json{{"source", src}, {"gold", gold}}.dump() << "\n";
    const auto e = test_embedder(src, dim, seed);
    qe.values.insert(qe.values.end(), e.begin(), e.end());
  }
  write_embeddings(ws.query_embeddings, qe);
  return ws;
}

}  // namespace dlmmr::testing
