/*
 * Copyright 2026 The oneshot-eval Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Deterministic synthetic test collections shared by the unit tests and the
// acceptance binary.

#pragma once

#include "oneshot/oneshot.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace oneshot::testing_support {

// Uniform in [0, 1) from the top 53 bits; unlike the std distributions this
// is the same on every standard library.
inline double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::string padded(const char* prefix, std::size_t i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return prefix + digits;
}

struct SyntheticTrack {
  TextMap docs;
  TextMap queries;
  Qrels qrels;
  std::vector<Run> runs;  // system ids sys0 (best) .. sysN (worst)
  std::size_t baseline_index = 0;
  std::map<DocId, std::vector<double>> vectors;

  const Run& baseline() const { return runs[baseline_index]; }

  std::vector<QueryId> query_ids() const {
    std::vector<QueryId> out;
    for (const auto& [q, t] : queries) out.push_back(q);
    return out;
  }

  /// Writes corpus.tsv, queries.tsv, qrels.txt, baseline.run, runs/*.run and
  /// embeddings.jsonl under `dir`.
  void write_to(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir / "runs");
    std::ofstream corpus(dir / "corpus.tsv");
    for (const auto& [id, text] : docs) corpus << id << '\t' << text << '\n';
    std::ofstream qs(dir / "queries.tsv");
    for (const auto& [id, text] : queries) qs << id << '\t' << text << '\n';
    std::ofstream qr(dir / "qrels.txt");
    serialize_qrels(qr, qrels);
    std::ofstream base(dir / "baseline.run");
    serialize_run(base, baseline());
    for (const auto& run : runs) {
      std::ofstream out(dir / "runs" / (run.system_id + ".run"));
      serialize_run(out, run);
    }
    std::ofstream emb(dir / "embeddings.jsonl");
    for (const auto& [id, v] : vectors) {
      nlohmann::ordered_json j;
      j["docid"] = id;
      j["vector"] = v;
      emb << j.dump() << '\n';
    }
  }
};

struct TrackShape {
  std::size_t queries = 20;
  std::size_t docs = 200;
  std::size_t systems = 10;
  std::size_t run_length = 50;
  std::size_t baseline = 4;  // mid-pack system contributes the shallow pool
  std::size_t dim = 8;
};

/// Graded track (grades 0..3, every query has at least two grade-3 docs).
/// System s ranks by quality(s) * grade + noise, so lower ids tend to be
/// better. Relevant documents carry the query's topic words.
inline SyntheticTrack make_synthetic_track(std::uint64_t seed, const TrackShape& shape = {}) {
  std::mt19937_64 rng(seed);
  SyntheticTrack t;
  t.baseline_index = shape.baseline;
  std::vector<DocId> doc_ids;
  for (std::size_t d = 0; d < shape.docs; ++d) doc_ids.push_back(padded("D", d, 3));

  std::map<DocId, std::string> topic_text;
  for (std::size_t q = 0; q < shape.queries; ++q) {
    const auto qid = padded("Q", q, 2);
    std::string query_text;
    for (int j = 0; j < 3; ++j) query_text += "topic" + std::to_string(q) + "x" + std::to_string(j) + " ";
    t.queries[qid] = query_text + "common";
    // 12 relevant, 20 judged non-relevant.
    std::vector<DocId> shuffled = doc_ids;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t i = 0; i < 32; ++i) {
      const int grade = i < 2 ? 3 : i < 12 ? 1 + static_cast<int>(rng() % 3) : 0;
      t.qrels.grades[qid][shuffled[i]] = grade;
      for (int w = 0; w < grade * 2; ++w) {
        topic_text[shuffled[i]] += "topic" + std::to_string(q) + "x" + std::to_string(w % 3) + " ";
      }
    }
  }
  for (const auto& id : doc_ids) {
    std::string text;
    for (int w = 0; w < 30; ++w) text += "w" + std::to_string(rng() % 300) + " ";
    t.docs[id] = text + topic_text[id] + "common";
    std::vector<double> v(shape.dim);
    for (auto& x : v) x = unit(rng) * 2.0 - 1.0;
    t.vectors[id] = v;
  }

  for (std::size_t s = 0; s < shape.systems; ++s) {
    oneshot::Run run;
    run.system_id = "sys" + std::to_string(s);
    const double quality = 1.0 - 0.09 * static_cast<double>(s);
    for (const auto& [qid, text] : t.queries) {
      std::vector<ScoredDoc> scored;
      for (const auto& id : doc_ids) {
        const double g = static_cast<double>(t.qrels.grade(qid, id).value_or(0));
        scored.push_back(ScoredDoc{id, quality * g + 1.5 * unit(rng)});
      }
      std::sort(scored.begin(), scored.end(), precedes_in_run);
      scored.resize(shape.run_length);
      run.rankings[qid] = std::move(scored);
    }
    t.runs.push_back(std::move(run));
  }
  return t;
}

/// A mid-pack baseline whose top document is, per query, a relevant document
/// that no other system retrieves. All other systems retrieve several
/// relevant documents the shallow pool never sees.
inline SyntheticTrack make_pool_bias_track(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SyntheticTrack t;
  const std::size_t systems = 7;
  t.baseline_index = 3;
  for (std::size_t q = 0; q < 10; ++q) {
    const auto qid = padded("Q", q, 2);
    t.queries[qid] = "query " + std::to_string(q);
    // Docs: U (unique to the baseline), R0..R7 relevant, N0..N29 non-relevant.
    t.qrels.grades[qid][qid + "-U"] = 2;
    for (int r = 0; r < 8; ++r) t.qrels.grades[qid][qid + "-R" + std::to_string(r)] = 2;
    for (int n = 0; n < 30; ++n) t.qrels.grades[qid][qid + "-N" + std::to_string(n)] = 0;
  }
  for (std::size_t s = 0; s < systems; ++s) {
    oneshot::Run run;
    run.system_id = "sys" + std::to_string(s);
    for (const auto& [qid, text] : t.queries) {
      std::vector<ScoredDoc> docs;
      // sys0 retrieves 7 relevant documents at the top, sys6 only 1. The
      // baseline has U first, three non-relevant documents, then 4 relevant.
      const std::size_t rel = systems - s;
      std::vector<DocId> order;
      std::vector<DocId> padding;
      for (int n = 0; n < 10; ++n) padding.push_back(qid + "-N" + std::to_string(rng() % 30));
      std::sort(padding.begin(), padding.end());
      padding.erase(std::unique(padding.begin(), padding.end()), padding.end());
      std::shuffle(padding.begin(), padding.end(), rng);
      if (s == t.baseline_index) {
        order.push_back(qid + "-U");
        order.insert(order.end(), padding.begin(), padding.begin() + 3);
        padding.erase(padding.begin(), padding.begin() + 3);
      }
      for (std::size_t r = 0; r < rel; ++r) order.push_back(qid + "-R" + std::to_string(r));
      order.insert(order.end(), padding.begin(), padding.end());
      for (std::size_t i = 0; i < order.size(); ++i) {
        docs.push_back(ScoredDoc{order[i], 100.0 - static_cast<double>(i)});
      }
      run.rankings[qid] = std::move(docs);
    }
    t.runs.push_back(std::move(run));
  }
  for (const auto& [qid, docs] : t.qrels.grades) {
    for (const auto& [id, g] : docs) t.docs[id] = "text of " + id;
  }
  return t;
}

}  // namespace oneshot::testing_support
