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

// Readers and writers for the interchange formats: TREC run and qrels files,
// TSV / JSON-lines text collections, JSON-lines embedding stores, the
// JSON-lines labeler score cache and the bridge task/score protocol.

#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "oneshot/error.hpp"

namespace oneshot {

using QueryId = std::string;
using DocId = std::string;
using QueryDoc = std::pair<QueryId, DocId>;

namespace detail {

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r' || line[i] == '\n')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && !(line[i] == ' ' || line[i] == '\t' ||
                                line[i] == '\r' || line[i] == '\n')) {
      ++i;
    }
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

inline bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  });
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline std::optional<double> parse_real(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<long long> parse_integer(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

inline nlohmann::json parse_json_line(const std::string& line,
                                      const std::string& source,
                                      std::size_t line_no) {
  try {
    auto value = nlohmann::json::parse(line);
    if (!value.is_object()) {
      throw ParseError(source, line_no, "expected a JSON object");
    }
    return value;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
  }
}

inline std::string required_string(const nlohmann::json& obj,
                                   const char* field,
                                   const std::string& source,
                                   std::size_t line_no) {
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw ParseError(source, line_no, std::string("missing field '") + field + "'");
  }
  if (!it->is_string()) {
    throw ParseError(source, line_no,
                     std::string("field '") + field + "' must be a string");
  }
  return it->get<std::string>();
}

inline double required_number(const nlohmann::json& obj, const char* field,
                              const std::string& source, std::size_t line_no) {
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw ParseError(source, line_no, std::string("missing field '") + field + "'");
  }
  if (!it->is_number()) {
    throw ParseError(source, line_no,
                     std::string("field '") + field + "' must be a number");
  }
  return it->get<double>();
}

}  // namespace detail

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_real(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

// ---------------------------------------------------------------------------
// Runs

struct ScoredDoc {
  DocId doc_id;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// One system's ranked output. After normalization every per-query list is in
/// evaluation order: score descending, equal scores by doc id descending.
struct Run {
  std::string system_id;
  std::map<QueryId, std::vector<ScoredDoc>> rankings;

  friend bool operator==(const Run&, const Run&) = default;
};

/// Evaluation order used for every ranking in the toolkit.
inline bool precedes_in_run(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id > b.doc_id;
}

inline void normalize(Run& run) {
  for (auto& [qid, docs] : run.rankings) {
    std::sort(docs.begin(), docs.end(), precedes_in_run);
  }
}

/// Parses `qid Q0 docid rank score tag` lines. The rank column is ignored and
/// the order recomputed from scores.
inline Run parse_run(std::istream& in, const std::string& source = "<run>") {
  Run run;
  std::set<QueryDoc> seen;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    const auto fields = detail::split_whitespace(line);
    if (fields.size() != 6) {
      throw ParseError(source, line_no,
                       "expected 6 fields, found " + std::to_string(fields.size()));
    }
    const auto score = detail::parse_real(fields[4]);
    if (!score) {
      throw ParseError(source, line_no,
                       "unparseable score '" + std::string(fields[4]) + "'");
    }
    QueryId qid(fields[0]);
    DocId docid(fields[2]);
    if (!seen.emplace(qid, docid).second) {
      throw ParseError(source, line_no,
                       "duplicate document '" + docid + "' for query '" + qid + "'");
    }
    if (first) {
      run.system_id = std::string(fields[5]);
      first = false;
    }
    run.rankings[qid].push_back(ScoredDoc{std::move(docid), *score});
  }
  normalize(run);
  return run;
}

inline void serialize_run(std::ostream& out, const Run& run) {
  for (const auto& [qid, docs] : run.rankings) {
    std::size_t rank = 1;
    for (const auto& doc : docs) {
      out << qid << " Q0 " << doc.doc_id << ' ' << rank++ << ' '
          << format_real(doc.score) << ' ' << run.system_id << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Qrels

/// Graded relevance judgments, grades >= 0.
struct Qrels {
  std::map<QueryId, std::map<DocId, int>> grades;

  std::optional<int> grade(const QueryId& qid, const DocId& docid) const {
    const auto q = grades.find(qid);
    if (q == grades.end()) return std::nullopt;
    const auto d = q->second.find(docid);
    if (d == q->second.end()) return std::nullopt;
    return d->second;
  }

  bool has_query(const QueryId& qid) const { return grades.count(qid) != 0; }

  int max_grade() const {
    int best = 0;
    for (const auto& [qid, docs] : grades) {
      for (const auto& [docid, g] : docs) best = std::max(best, g);
    }
    return best;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [qid, docs] : grades) n += docs.size();
    return n;
  }

  friend bool operator==(const Qrels&, const Qrels&) = default;
};

/// Parses `qid iter docid grade` lines; the iteration column is ignored.
/// Repeating a pair with the same grade is accepted.
inline Qrels parse_qrels(std::istream& in, const std::string& source = "<qrels>") {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    const auto fields = detail::split_whitespace(line);
    if (fields.size() != 4) {
      throw ParseError(source, line_no,
                       "expected 4 fields, found " + std::to_string(fields.size()));
    }
    const auto grade = detail::parse_integer(fields[3]);
    if (!grade) {
      throw ParseError(source, line_no,
                       "unparseable grade '" + std::string(fields[3]) + "'");
    }
    if (*grade < 0 || *grade > 1'000'000) {
      throw ParseError(source, line_no,
                       "grade out of range: " + std::string(fields[3]));
    }
    auto& docs = qrels.grades[QueryId(fields[0])];
    const auto [it, inserted] =
        docs.emplace(DocId(fields[2]), static_cast<int>(*grade));
    if (!inserted && it->second != *grade) {
      throw ParseError(source, line_no,
                       "conflicting duplicate judgment for query '" +
                           std::string(fields[0]) + "', document '" +
                           std::string(fields[2]) + "'");
    }
  }
  return qrels;
}

inline void serialize_qrels(std::ostream& out, const Qrels& qrels) {
  for (const auto& [qid, docs] : qrels.grades) {
    for (const auto& [docid, g] : docs) {
      out << qid << " 0 " << docid << ' ' << g << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Text collections

enum class TextFormat { kTsv, kJsonLines };

/// Which id field a JSON-lines record carries: `docid` or `qid`.
enum class TextKind { kDocuments, kQueries };

using TextMap = std::map<std::string, std::string>;

struct Corpus {
  TextMap texts;    // doc id -> passage
  TextMap queries;  // query id -> query text
};

inline std::optional<TextFormat> parse_text_format(std::string_view name) {
  if (name == "tsv") return TextFormat::kTsv;
  if (name == "jsonl" || name == "json") return TextFormat::kJsonLines;
  return std::nullopt;
}

/// Picks the format from a file extension: `.jsonl`/`.json` is JSON lines,
/// anything else TSV.
inline TextFormat text_format_for_path(std::string_view path) {
  const auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.substr(path.size() - suffix.size()) == suffix;
  };
  return (ends_with(".jsonl") || ends_with(".json")) ? TextFormat::kJsonLines
                                                     : TextFormat::kTsv;
}

/// Loads `id<TAB>text` lines or JSON-lines records. Errors carry the 1-based
/// record index.
inline TextMap load_texts(std::istream& in, TextFormat format, TextKind kind,
                          const std::string& source = "<texts>") {
  const char* id_field = kind == TextKind::kDocuments ? "docid" : "qid";
  TextMap texts;
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (detail::is_blank(line)) continue;
    ++record;
    std::string id;
    std::string text;
    if (format == TextFormat::kTsv) {
      const std::string_view view = detail::strip_cr(line);
      const auto tab = view.find('\t');
      if (tab == std::string_view::npos) {
        throw ParseError(source, record, "missing tab separator");
      }
      id = std::string(view.substr(0, tab));
      text = std::string(view.substr(tab + 1));
    } else {
      const auto obj = detail::parse_json_line(line, source, record);
      id = detail::required_string(obj, id_field, source, record);
      text = detail::required_string(obj, "text", source, record);
    }
    if (id.empty()) throw ParseError(source, record, "empty id");
    if (text.empty()) {
      throw ParseError(source, record, "empty text for '" + id + "'");
    }
    if (!texts.emplace(id, std::move(text)).second) {
      throw ParseError(source, record, "duplicate id '" + id + "'");
    }
  }
  return texts;
}

inline Corpus load_corpus(std::istream& docs, std::istream& queries,
                          TextFormat docs_format, TextFormat queries_format) {
  Corpus corpus;
  corpus.texts = load_texts(docs, docs_format, TextKind::kDocuments, "<corpus>");
  corpus.queries =
      load_texts(queries, queries_format, TextKind::kQueries, "<queries>");
  return corpus;
}

// ---------------------------------------------------------------------------
// Embeddings

/// Dense vectors of a common dimension, stored row-major in doc id order.
class EmbeddingStore {
 public:
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<DocId>& ids() const noexcept { return ids_; }

  bool contains(const DocId& id) const { return index_.count(id) != 0; }

  std::optional<std::size_t> row_of(const DocId& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const double* row(std::size_t i) const { return data_.data() + i * dim_; }

  /// Builds a store from (id, vector) pairs; throws on mismatched or empty
  /// input.
  static EmbeddingStore from_vectors(std::map<DocId, std::vector<double>> vectors) {
    if (vectors.empty()) throw Error("empty store");
    EmbeddingStore store;
    store.dim_ = vectors.begin()->second.size();
    if (store.dim_ == 0) throw Error("zero-dimensional vectors");
    store.ids_.reserve(vectors.size());
    store.data_.reserve(vectors.size() * store.dim_);
    for (auto& [id, v] : vectors) {
      if (v.size() != store.dim_) throw Error("dimension mismatch for '" + id + "'");
      store.index_.emplace(id, store.ids_.size());
      store.ids_.push_back(id);
      store.data_.insert(store.data_.end(), v.begin(), v.end());
    }
    return store;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<DocId> ids_;
  std::vector<double> data_;
  std::map<DocId, std::size_t> index_;
};

/// Loads `{"docid": str, "vector": [real, ...]}` lines.
inline EmbeddingStore load_embeddings(std::istream& in,
                                      const std::string& source = "<embeddings>") {
  std::map<DocId, std::vector<double>> vectors;
  std::optional<std::size_t> dim;
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (detail::is_blank(line)) continue;
    ++record;
    const auto obj = detail::parse_json_line(line, source, record);
    auto id = detail::required_string(obj, "docid", source, record);
    const auto it = obj.find("vector");
    if (it == obj.end() || !it->is_array()) {
      throw ParseError(source, record, "missing array field 'vector'");
    }
    std::vector<double> v;
    v.reserve(it->size());
    for (const auto& x : *it) {
      if (!x.is_number()) throw ParseError(source, record, "non-numeric component");
      const double value = x.get<double>();
      if (!std::isfinite(value)) {
        throw ParseError(source, record, "non-finite component");
      }
      v.push_back(value);
    }
    if (v.empty()) throw ParseError(source, record, "empty vector");
    if (!dim) dim = v.size();
    if (v.size() != *dim) {
      throw ParseError(source, record,
                       "dimension mismatch: expected " + std::to_string(*dim) +
                           ", found " + std::to_string(v.size()));
    }
    if (!vectors.emplace(id, std::move(v)).second) {
      throw ParseError(source, record, "duplicate docid '" + id + "'");
    }
  }
  if (vectors.empty()) throw Error(source + ": empty store");
  return EmbeddingStore::from_vectors(std::move(vectors));
}

// ---------------------------------------------------------------------------
// Score cache

/// One labeler output for one hole.
struct ScoreRecord {
  std::string labeler;
  QueryId qid;
  DocId rel_docid;
  DocId unk_docid;
  double score = 0.0;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

/// Canonical record order: labeler, query, unknown document.
inline bool canonical_less(const ScoreRecord& a, const ScoreRecord& b) {
  return std::tie(a.labeler, a.qid, a.unk_docid) <
         std::tie(b.labeler, b.qid, b.unk_docid);
}

class ScoreCache {
 public:
  using Key = std::tuple<std::string, QueryId, DocId>;

  /// Adds a record. A duplicate key is ignored when its score is bitwise
  /// equal to the stored one and rejected otherwise.
  void insert(const ScoreRecord& record) {
    if (!(record.score >= 0.0 && record.score <= 1.0)) {
      throw Error("score outside [0,1]: " + format_real(record.score));
    }
    Key key{record.labeler, record.qid, record.unk_docid};
    const auto it = index_.find(key);
    if (it != index_.end()) {
      if (std::bit_cast<std::uint64_t>(records_[it->second].score) !=
          std::bit_cast<std::uint64_t>(record.score)) {
        throw Error("conflicting duplicate score for (" + record.labeler + ", " +
                    record.qid + ", " + record.unk_docid + ")");
      }
      return;
    }
    index_.emplace(std::move(key), records_.size());
    records_.push_back(record);
  }

  /// Inserts or replaces, used when refreshing stale entries.
  void upsert(const ScoreRecord& record) {
    Key key{record.labeler, record.qid, record.unk_docid};
    const auto it = index_.find(key);
    if (it == index_.end()) {
      insert(record);
      return;
    }
    if (!(record.score >= 0.0 && record.score <= 1.0)) {
      throw Error("score outside [0,1]: " + format_real(record.score));
    }
    records_[it->second] = record;
  }

  const ScoreRecord* find(const std::string& labeler, const QueryId& qid,
                          const DocId& unk_docid) const {
    const auto it = index_.find(Key{labeler, qid, unk_docid});
    return it == index_.end() ? nullptr : &records_[it->second];
  }

  std::optional<double> score(const std::string& labeler, const QueryId& qid,
                              const DocId& unk_docid) const {
    const auto* r = find(labeler, qid, unk_docid);
    if (!r) return std::nullopt;
    return r->score;
  }

  const std::vector<ScoreRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  /// Records in canonical order.
  std::vector<ScoreRecord> sorted_records() const {
    std::vector<ScoreRecord> out = records_;
    std::sort(out.begin(), out.end(), canonical_less);
    return out;
  }

 private:
  std::vector<ScoreRecord> records_;
  std::map<Key, std::size_t> index_;
};

inline ScoreCache read_score_cache(std::istream& in,
                                   const std::string& source = "<scores>") {
  ScoreCache cache;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    const auto obj = detail::parse_json_line(line, source, line_no);
    ScoreRecord r;
    r.labeler = detail::required_string(obj, "labeler", source, line_no);
    r.qid = detail::required_string(obj, "qid", source, line_no);
    r.rel_docid = detail::required_string(obj, "rel_docid", source, line_no);
    r.unk_docid = detail::required_string(obj, "unk_docid", source, line_no);
    r.score = detail::required_number(obj, "score", source, line_no);
    try {
      cache.insert(r);
    } catch (const Error& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return cache;
}

inline void write_score_record(std::ostream& out, const ScoreRecord& r) {
  nlohmann::ordered_json obj;
  obj["labeler"] = r.labeler;
  obj["qid"] = r.qid;
  obj["rel_docid"] = r.rel_docid;
  obj["unk_docid"] = r.unk_docid;
  obj["score"] = r.score;
  out << obj.dump() << '\n';
}

/// Writes records in canonical order.
inline void write_score_cache(std::ostream& out, std::vector<ScoreRecord> records) {
  std::sort(records.begin(), records.end(), canonical_less);
  for (const auto& r : records) write_score_record(out, r);
}

inline void write_score_cache(std::ostream& out, const ScoreCache& cache) {
  write_score_cache(out, cache.records());
}

// ---------------------------------------------------------------------------
// Bridge protocol: the primary writes tasks, an external scorer answers with
// `{"id","score"}` lines terminated by `{"done": true, "count": N}`.

struct BridgeTask {
  std::string id;
  std::string query;
  std::string passage_a;  // known relevant document
  std::string passage_b;  // unjudged document
};

struct BridgeScore {
  std::string id;
  double score = 0.0;
};

inline std::string bridge_task_id(const QueryId& qid, const DocId& unk_docid) {
  return qid + '\t' + unk_docid;
}

inline std::optional<QueryDoc> split_bridge_task_id(std::string_view id) {
  const auto tab = id.find('\t');
  if (tab == std::string_view::npos || tab == 0 || tab + 1 == id.size() ||
      id.find('\t', tab + 1) != std::string_view::npos) {
    return std::nullopt;
  }
  return QueryDoc{std::string(id.substr(0, tab)), std::string(id.substr(tab + 1))};
}

inline void write_bridge_tasks(std::ostream& out, const std::vector<BridgeTask>& tasks) {
  for (const auto& t : tasks) {
    nlohmann::ordered_json obj;
    obj["id"] = t.id;
    obj["query"] = t.query;
    obj["passage_a"] = t.passage_a;
    obj["passage_b"] = t.passage_b;
    out << obj.dump() << '\n';
  }
}

/// Reads a bridge score file. Files without the footer record, or whose
/// footer count disagrees with the number of score lines, are rejected.
inline std::vector<BridgeScore> read_bridge_scores(std::istream& in,
                                                   const std::string& source = "<bridge>") {
  std::vector<BridgeScore> scores;
  std::set<std::string> ids;
  std::optional<std::size_t> footer_line;
  std::size_t footer_count = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    if (footer_line) throw ParseError(source, line_no, "record after footer");
    const auto obj = detail::parse_json_line(line, source, line_no);
    if (obj.contains("done")) {
      if (!obj["done"].is_boolean() || !obj["done"].get<bool>() ||
          !obj.contains("count") || !obj["count"].is_number_unsigned()) {
        throw ParseError(source, line_no, "malformed footer");
      }
      footer_line = line_no;
      footer_count = obj["count"].get<std::size_t>();
      continue;
    }
    BridgeScore s;
    s.id = detail::required_string(obj, "id", source, line_no);
    s.score = detail::required_number(obj, "score", source, line_no);
    if (!(s.score >= 0.0 && s.score <= 1.0)) {
      throw ParseError(source, line_no, "score outside [0,1]");
    }
    if (!ids.insert(s.id).second) {
      throw ParseError(source, line_no, "duplicate id");
    }
    scores.push_back(std::move(s));
  }
  if (!footer_line) throw Error(source + ": missing footer record (incomplete output)");
  if (footer_count != scores.size()) {
    throw Error(source + ": footer count " + std::to_string(footer_count) +
                " does not match " + std::to_string(scores.size()) + " score records");
  }
  return scores;
}

}  // namespace oneshot
