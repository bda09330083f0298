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

#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "oneshot/error.hpp"
#include "oneshot/trec_io.hpp"

namespace oneshot {

/// The single known relevant document of a query and its 1-based rank in
/// the baseline run that surfaced it.
struct PoolEntry {
  DocId rel_doc_id;
  std::size_t examined = 0;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

/// Shallow assessments: one known relevant document per query.
struct ShallowPool {
  std::map<QueryId, PoolEntry> entries;

  bool contains(const QueryId& qid) const { return entries.count(qid) != 0; }

  const DocId* rel_doc(const QueryId& qid) const {
    const auto it = entries.find(qid);
    return it == entries.end() ? nullptr : &it->second.rel_doc_id;
  }

  std::vector<QueryId> queries() const {
    std::vector<QueryId> out;
    out.reserve(entries.size());
    for (const auto& [qid, entry] : entries) out.push_back(qid);
    return out;
  }

  friend bool operator==(const ShallowPool&, const ShallowPool&) = default;
};

struct PoolSimulation {
  ShallowPool pool;
  std::vector<QueryId> no_relevant_in_run;  // judged, but nothing relevant retrieved
  std::vector<QueryId> unjudged_queries;    // absent from the qrels entirely

  double mean_examined() const {
    if (pool.entries.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [qid, e] : pool.entries) total += static_cast<double>(e.examined);
    return total / static_cast<double>(pool.entries.size());
  }
};

/// Walks each query of the (normalized) baseline run top-down and keeps the
/// first document whose grade reaches `rel_threshold`.
inline PoolSimulation simulate_shallow_pool(const Run& baseline, const Qrels& full_qrels,
                                            int rel_threshold) {
  if (rel_threshold < 1) throw std::invalid_argument("rel_threshold must be >= 1");
  PoolSimulation sim;
  for (const auto& [qid, docs] : baseline.rankings) {
    if (!full_qrels.has_query(qid)) {
      sim.unjudged_queries.push_back(qid);
      continue;
    }
    bool found = false;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const auto g = full_qrels.grade(qid, docs[i].doc_id);
      if (g && *g >= rel_threshold) {
        sim.pool.entries.emplace(qid, PoolEntry{docs[i].doc_id, i + 1});
        found = true;
        break;
      }
    }
    if (!found) sim.no_relevant_in_run.push_back(qid);
  }
  return sim;
}

/// Baseline documents ranked above d+; the simulated assessor saw them and
/// found them non-relevant.
inline std::set<QueryDoc> examined_nonrelevant(const Run& baseline, const ShallowPool& pool) {
  std::set<QueryDoc> out;
  for (const auto& [qid, entry] : pool.entries) {
    const auto it = baseline.rankings.find(qid);
    if (it == baseline.rankings.end()) continue;
    for (const auto& doc : it->second) {
      if (doc.doc_id == entry.rel_doc_id) break;
      out.emplace(qid, doc.doc_id);
    }
  }
  return out;
}

struct HoleSet {
  std::set<QueryDoc> holes;
  std::size_t depth = 0;

  std::size_t size() const noexcept { return holes.size(); }
};

/// Unjudged (query, document) pairs in the top `depth` of any run, for pooled
/// queries only.
inline HoleSet find_holes(std::span<const Run> runs, const ShallowPool& pool,
                          std::size_t depth) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  HoleSet result;
  result.depth = depth;
  for (const auto& run : runs) {
    for (const auto& [qid, docs] : run.rankings) {
      const DocId* rel = pool.rel_doc(qid);
      if (!rel) continue;
      const std::size_t n = std::min(depth, docs.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (docs[i].doc_id != *rel) result.holes.emplace(qid, docs[i].doc_id);
      }
    }
  }
  return result;
}

struct JudgedAtK {
  std::map<QueryId, double> per_query;
  double mean = 0.0;
};

/// Fraction of the top min(k, length) documents present in `judged`, per run
/// query, and the mean over those queries. Hole@k is 1 minus this value.
inline JudgedAtK judged_at_k(const Run& run, const std::set<QueryDoc>& judged,
                             std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  JudgedAtK result;
  double total = 0.0;
  for (const auto& [qid, docs] : run.rankings) {
    const std::size_t n = std::min(k, docs.size());
    if (n == 0) {
      result.per_query[qid] = 0.0;
      continue;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (judged.count(QueryDoc{qid, docs[i].doc_id})) ++hits;
    }
    const double value = static_cast<double>(hits) / static_cast<double>(n);
    result.per_query[qid] = value;
    total += value;
  }
  if (!result.per_query.empty()) {
    result.mean = total / static_cast<double>(result.per_query.size());
  }
  return result;
}

inline std::set<QueryDoc> judged_pairs(const Qrels& qrels) {
  std::set<QueryDoc> out;
  for (const auto& [qid, docs] : qrels.grades) {
    for (const auto& [docid, g] : docs) out.emplace(qid, docid);
  }
  return out;
}

inline std::set<QueryDoc> judged_pairs(const ShallowPool& pool) {
  std::set<QueryDoc> out;
  for (const auto& [qid, e] : pool.entries) out.emplace(qid, e.rel_doc_id);
  return out;
}

// Pool files: a qrels file with grade 1 for each d+, plus a JSON sidecar
// mapping query id to the examined count.

inline void write_pool_qrels(std::ostream& out, const ShallowPool& pool) {
  for (const auto& [qid, e] : pool.entries) {
    out << qid << " 0 " << e.rel_doc_id << " 1\n";
  }
}

inline void write_pool_examined(std::ostream& out, const ShallowPool& pool) {
  nlohmann::json obj = nlohmann::json::object();
  for (const auto& [qid, e] : pool.entries) obj[qid] = e.examined;
  out << obj.dump(2) << '\n';
}

inline ShallowPool read_pool(std::istream& qrels_in, std::istream& examined_in) {
  const Qrels qrels = parse_qrels(qrels_in, "<pool>");
  nlohmann::json examined;
  try {
    examined = nlohmann::json::parse(examined_in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("pool sidecar: invalid JSON: ") + e.what());
  }
  if (!examined.is_object()) throw Error("pool sidecar: expected a JSON object");
  ShallowPool pool;
  for (const auto& [qid, docs] : qrels.grades) {
    std::vector<DocId> relevant;
    for (const auto& [docid, g] : docs) {
      if (g >= 1) relevant.push_back(docid);
    }
    if (relevant.size() != 1) {
      throw Error("pool: query '" + qid + "' must have exactly one relevant document");
    }
    const auto it = examined.find(qid);
    if (it == examined.end() || !it->is_number_unsigned() || it->get<std::size_t>() < 1) {
      throw Error("pool sidecar: missing or invalid examined count for '" + qid + "'");
    }
    pool.entries.emplace(qid, PoolEntry{relevant.front(), it->get<std::size_t>()});
  }
  return pool;
}

}  // namespace oneshot
