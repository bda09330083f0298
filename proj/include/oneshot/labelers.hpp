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

// One-shot labelers: estimators of the gain of an unjudged document given
// the query and a single known relevant document, and the gain tables built
// from their output.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "oneshot/error.hpp"
#include "oneshot/neighbors.hpp"
#include "oneshot/pooling.hpp"
#include "oneshot/trec_io.hpp"

namespace oneshot {

inline constexpr std::size_t kDefaultMaxRepDepth = 128;

/// Per-query gains in [0,1]. Documents without an entry have gain 0.
struct GainTable {
  std::map<QueryId, std::map<DocId, double>> gains;

  double gain(const QueryId& qid, const DocId& docid) const {
    const auto q = gains.find(qid);
    if (q == gains.end()) return 0.0;
    const auto d = q->second.find(docid);
    return d == q->second.end() ? 0.0 : d->second;
  }

  friend bool operator==(const GainTable&, const GainTable&) = default;
};

/// Linear grade normalization g / max_grade.
inline double normalized_gain(int grade, int max_grade) {
  if (max_grade <= 0) return 0.0;
  return static_cast<double>(grade) / static_cast<double>(max_grade);
}

/// Reference gains from complete judgments, normalized by the largest grade.
inline GainTable gain_table_from_qrels(const Qrels& qrels) {
  const int max_grade = qrels.max_grade();
  GainTable table;
  for (const auto& [qid, docs] : qrels.grades) {
    auto& row = table.gains[qid];
    for (const auto& [docid, g] : docs) {
      if (g > 0) row.emplace(docid, normalized_gain(g, max_grade));
    }
  }
  return table;
}

/// Linearly degrading gain: the i-th neighbor (1-based) gets (k - i) / k.
inline std::map<DocId, double> maxrep_gains(const NeighborList& neighbors, std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (neighbors.size() > k) {
    throw std::invalid_argument("neighbor list longer than k");
  }
  std::map<DocId, double> gains;
  const double denom = static_cast<double>(k);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    gains.emplace(neighbors[i].doc_id, static_cast<double>(k - (i + 1)) / denom);
  }
  return gains;
}

// ---------------------------------------------------------------------------
// Labelers

struct QueryContext {
  const QueryId& qid;
  const DocId& rel_doc;
  const std::string* query_text;  // null when no query texts were loaded
};

class Labeler {
 public:
  virtual ~Labeler() = default;

  virtual const std::string& id() const = 0;

  /// Scores `unknown` for one query. An empty optional means no estimate is
  /// available for that document.
  virtual std::vector<std::optional<double>> score(const QueryContext& ctx,
                                                   std::span<const DocId> unknown) const = 0;
};

/// Unjudged documents are non-relevant.
class ZeroLabeler final : public Labeler {
 public:
  const std::string& id() const override { return id_; }

  std::vector<std::optional<double>> score(const QueryContext&,
                                           std::span<const DocId> unknown) const override {
    return std::vector<std::optional<double>>(unknown.size(), 0.0);
  }

 private:
  std::string id_ = "zero";
};

/// Test fixture: reads the true normalized gain off reference judgments.
class OracleLabeler final : public Labeler {
 public:
  explicit OracleLabeler(const Qrels& reference)
      : reference_(reference), max_grade_(reference.max_grade()) {}

  const std::string& id() const override { return id_; }

  std::vector<std::optional<double>> score(const QueryContext& ctx,
                                           std::span<const DocId> unknown) const override {
    std::vector<std::optional<double>> out;
    out.reserve(unknown.size());
    for (const auto& d : unknown) {
      const auto g = reference_.grade(ctx.qid, d);
      out.emplace_back(g ? normalized_gain(*g, max_grade_) : 0.0);
    }
    return out;
  }

 private:
  std::string id_ = "oracle";
  const Qrels& reference_;
  int max_grade_;
};

/// One-shot MaxRep: neighbors of d+ inherit a linearly degrading gain. The
/// query text is never consulted.
class MaxRepLabeler final : public Labeler {
 public:
  using NeighborSource = std::function<NeighborList(const DocId& probe, std::size_t k)>;

  MaxRepLabeler(std::string id, NeighborSource source, std::size_t k)
      : id_(std::move(id)), source_(std::move(source)), k_(k) {
    if (k_ < 1) throw std::invalid_argument("k must be >= 1");
  }

  const std::string& id() const override { return id_; }
  std::size_t k() const noexcept { return k_; }

  std::vector<std::optional<double>> score(const QueryContext& ctx,
                                           std::span<const DocId> unknown) const override {
    const auto gains = maxrep_gains(source_(ctx.rel_doc, k_), k_);
    std::vector<std::optional<double>> out;
    out.reserve(unknown.size());
    for (const auto& d : unknown) {
      const auto it = gains.find(d);
      out.emplace_back(it == gains.end() ? 0.0 : it->second);
    }
    return out;
  }

 private:
  std::string id_;
  NeighborSource source_;
  std::size_t k_;
};

inline std::unique_ptr<MaxRepLabeler> make_maxrep_bm25(const LexicalIndex& index,
                                                       std::size_t k = kDefaultMaxRepDepth,
                                                       Bm25Params params = {}) {
  return std::make_unique<MaxRepLabeler>(
      "maxrep-bm25",
      [&index, params](const DocId& probe, std::size_t depth) {
        return bm25_neighbors(index, probe, depth, params);
      },
      k);
}

inline std::unique_ptr<MaxRepLabeler> make_maxrep_embed(const EmbeddingStore& store,
                                                        std::size_t k = kDefaultMaxRepDepth) {
  return std::make_unique<MaxRepLabeler>(
      "maxrep-embed",
      [&store](const DocId& probe, std::size_t depth) {
        return embed_neighbors(store, probe, depth);
      },
      k);
}

/// Reads precomputed scores (e.g. from an external neural scorer) verbatim.
class CachedLabeler final : public Labeler {
 public:
  CachedLabeler(std::string id, std::map<QueryDoc, double> scores)
      : id_(std::move(id)), scores_(std::move(scores)) {}

  const std::string& id() const override { return id_; }

  std::vector<std::optional<double>> score(const QueryContext& ctx,
                                           std::span<const DocId> unknown) const override {
    std::vector<std::optional<double>> out;
    out.reserve(unknown.size());
    for (const auto& d : unknown) {
      const auto it = scores_.find(QueryDoc{ctx.qid, d});
      out.push_back(it == scores_.end() ? std::nullopt : std::optional<double>(it->second));
    }
    return out;
  }

 private:
  std::string id_;
  std::map<QueryDoc, double> scores_;
};

/// Converts bridge output into per-pair scores.
inline std::map<QueryDoc, double> scores_from_bridge(const std::vector<BridgeScore>& bridge) {
  std::map<QueryDoc, double> out;
  for (const auto& s : bridge) {
    const auto pair = split_bridge_task_id(s.id);
    if (!pair) throw Error("bridge score id is not of the form '<qid>\\t<docid>': " + s.id);
    out.emplace(*pair, s.score);
  }
  return out;
}

/// Raised when a labeler has no estimate for some holes.
class MissingScoresError : public Error {
 public:
  explicit MissingScoresError(std::vector<QueryDoc> missing)
      : Error(describe(missing)), missing_(std::move(missing)) {}

  const std::vector<QueryDoc>& missing() const noexcept { return missing_; }

 private:
  static std::string describe(const std::vector<QueryDoc>& missing) {
    std::string msg = std::to_string(missing.size()) + " hole(s) without a score:";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) {
      msg += " (" + missing[i].first + ", " + missing[i].second + ")";
    }
    if (shown < missing.size()) msg += " ...";
    return msg;
  }

  std::vector<QueryDoc> missing_;
};

// ---------------------------------------------------------------------------
// Labeling

struct LabelOptions {
  std::size_t threads = 1;
  /// Pairs forced to score 0 (e.g. the baseline documents examined before d+).
  const std::set<QueryDoc>* pinned_zero = nullptr;
  const TextMap* queries = nullptr;
};

/// Holes grouped by query, in canonical order.
inline std::vector<std::pair<QueryId, std::vector<DocId>>> group_holes(const HoleSet& holes) {
  std::vector<std::pair<QueryId, std::vector<DocId>>> groups;
  for (const auto& [qid, docid] : holes.holes) {
    if (groups.empty() || groups.back().first != qid) groups.emplace_back(qid, std::vector<DocId>{});
    groups.back().second.push_back(docid);
  }
  return groups;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace detail

/// Produces one record per hole, sorted by (query, unknown document)
/// regardless of the thread count.
inline std::vector<ScoreRecord> label(const Labeler& labeler, const ShallowPool& pool,
                                      const HoleSet& holes, const LabelOptions& options = {}) {
  const auto groups = group_holes(holes);
  std::vector<std::vector<ScoreRecord>> per_query(groups.size());
  std::vector<std::vector<QueryDoc>> missing(groups.size());
  std::vector<std::exception_ptr> failures(groups.size());

  detail::parallel_for(groups.size(), options.threads, [&](std::size_t g) {
    try {
      const auto& [qid, docs] = groups[g];
      const DocId* rel = pool.rel_doc(qid);
      if (!rel) throw Error("hole for query '" + qid + "' which has no pool entry");
      const std::string* text = nullptr;
      if (options.queries) {
        const auto it = options.queries->find(qid);
        if (it != options.queries->end()) text = &it->second;
      }
      const QueryContext ctx{qid, *rel, text};
      const auto scores = labeler.score(ctx, docs);
      auto& out = per_query[g];
      out.reserve(docs.size());
      for (std::size_t i = 0; i < docs.size(); ++i) {
        double value = 0.0;
        if (options.pinned_zero && options.pinned_zero->count(QueryDoc{qid, docs[i]})) {
          value = 0.0;
        } else if (!scores[i]) {
          missing[g].emplace_back(qid, docs[i]);
          continue;
        } else {
          value = *scores[i];
        }
        if (!(value >= 0.0 && value <= 1.0)) {
          throw Error(labeler.id() + " produced a score outside [0,1] for (" + qid + ", " +
                      docs[i] + ")");
        }
        out.push_back(ScoreRecord{labeler.id(), qid, *rel, docs[i], value});
      }
    } catch (...) {
      failures[g] = std::current_exception();
    }
  });

  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  std::vector<QueryDoc> all_missing;
  for (auto& m : missing) all_missing.insert(all_missing.end(), m.begin(), m.end());
  if (!all_missing.empty()) throw MissingScoresError(std::move(all_missing));

  std::vector<ScoreRecord> records;
  records.reserve(holes.size());
  for (auto& q : per_query) {
    std::move(q.begin(), q.end(), std::back_inserter(records));
  }
  return records;
}

/// Applies d+ -> 1 and hole -> labeler score. Records of other labelers are
/// ignored; documents without a record stay absent (gain 0).
inline GainTable build_gain_table(const ShallowPool& pool, std::span<const ScoreRecord> records,
                                  const std::string& labeler_id) {
  GainTable table;
  for (const auto& [qid, entry] : pool.entries) table.gains[qid][entry.rel_doc_id] = 1.0;
  for (const auto& r : records) {
    if (r.labeler != labeler_id) continue;
    const DocId* rel = pool.rel_doc(r.qid);
    if (!rel) throw Error("score record for query '" + r.qid + "' outside the pool");
    if (r.unk_docid == *rel) {
      throw Error("score record would overwrite the known relevant document '" + *rel +
                  "' of query '" + r.qid + "'");
    }
    if (r.rel_docid != *rel) {
      throw Error("score record for query '" + r.qid + "' was anchored on '" + r.rel_docid +
                  "' but the pool's relevant document is '" + *rel + "'");
    }
    if (!(r.score >= 0.0 && r.score <= 1.0)) {
      throw Error("score outside [0,1] for (" + r.qid + ", " + r.unk_docid + ")");
    }
    table.gains[r.qid][r.unk_docid] = r.score;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Labeler selection strings: zero | oracle | maxrep-bm25 | maxrep-embed |
// bridge:<path>

struct LabelerSpec {
  enum class Kind { kZero, kOracle, kMaxRepBm25, kMaxRepEmbed, kBridge };

  Kind kind = Kind::kZero;
  std::string bridge_path;

  std::string id() const {
    switch (kind) {
      case Kind::kZero: return "zero";
      case Kind::kOracle: return "oracle";
      case Kind::kMaxRepBm25: return "maxrep-bm25";
      case Kind::kMaxRepEmbed: return "maxrep-embed";
      case Kind::kBridge: return "bridge:" + bridge_path;
    }
    return {};
  }
};

inline std::optional<LabelerSpec> parse_labeler_spec(std::string_view text) {
  using Kind = LabelerSpec::Kind;
  if (text == "zero") return LabelerSpec{Kind::kZero, {}};
  if (text == "oracle") return LabelerSpec{Kind::kOracle, {}};
  if (text == "maxrep-bm25") return LabelerSpec{Kind::kMaxRepBm25, {}};
  if (text == "maxrep-embed") return LabelerSpec{Kind::kMaxRepEmbed, {}};
  constexpr std::string_view prefix = "bridge:";
  if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size()) {
    return LabelerSpec{Kind::kBridge, std::string(text.substr(prefix.size()))};
  }
  return std::nullopt;
}

}  // namespace oneshot
