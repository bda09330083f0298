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

// In-memory inverted index over a passage collection and document-as-query
// BM25 retrieval of a document's nearest lexical neighbors.

#pragma once

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "oneshot/error.hpp"
#include "oneshot/trec_io.hpp"

namespace oneshot {

/// Lowercases and splits on runs of non-alphanumeric code points. Invalid
/// UTF-8 bytes act as separators.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c = 0;
    U8_NEXT(s, i, length, c);
    if (c >= 0 && u_isalnum(c)) {
      const UChar32 lower = u_tolower(c);
      std::uint8_t buffer[U8_MAX_LENGTH];
      std::int32_t n = 0;
      U8_APPEND_UNSAFE(buffer, n, lower);
      current.append(reinterpret_cast<const char*>(buffer), static_cast<std::size_t>(n));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

/// Upper bound on distinct probe terms issued as a document query.
inline constexpr std::size_t kMaxDocQueryTerms = 1024;

struct Posting {
  std::uint32_t doc = 0;  // index into LexicalIndex::doc_ids()
  std::uint32_t tf = 0;
};

struct Neighbor {
  DocId doc_id;
  double score = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Neighbors ordered by score descending, ties by doc id ascending.
using NeighborList = std::vector<Neighbor>;

inline bool neighbor_precedes(const Neighbor& a, const Neighbor& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

class LexicalIndex {
 public:
  explicit LexicalIndex(const TextMap& texts) {
    if (texts.empty()) throw Error("cannot index an empty corpus");
    doc_ids_.reserve(texts.size());
    lengths_.reserve(texts.size());
    doc_terms_.reserve(texts.size());
    std::uint64_t total = 0;
    for (const auto& [id, text] : texts) {
      const auto doc = static_cast<std::uint32_t>(doc_ids_.size());
      doc_ids_.push_back(id);
      doc_index_.emplace(id, doc);
      std::map<std::string, std::uint32_t> tf;
      const auto tokens = tokenize(text);
      for (const auto& t : tokens) ++tf[t];
      for (const auto& [term, count] : tf) postings_[term].push_back(Posting{doc, count});
      lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
      total += tokens.size();
      doc_terms_.emplace_back(tf.begin(), tf.end());
    }
    avg_length_ = static_cast<double>(total) / static_cast<double>(doc_ids_.size());
  }

  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  double avg_length() const noexcept { return avg_length_; }
  const std::vector<DocId>& doc_ids() const noexcept { return doc_ids_; }

  std::optional<std::uint32_t> find_doc(const DocId& id) const {
    const auto it = doc_index_.find(id);
    if (it == doc_index_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t length(std::uint32_t doc) const { return lengths_.at(doc); }

  /// (term, tf) pairs of a document, term-sorted.
  std::span<const std::pair<std::string, std::uint32_t>> terms(std::uint32_t doc) const {
    return doc_terms_.at(doc);
  }

  std::span<const Posting> postings(const std::string& term) const {
    const auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
  }

  std::size_t doc_frequency(const std::string& term) const { return postings(term).size(); }

  std::size_t vocabulary_size() const noexcept { return postings_.size(); }

 private:
  std::vector<DocId> doc_ids_;
  std::unordered_map<DocId, std::uint32_t> doc_index_;
  std::vector<std::uint32_t> lengths_;
  std::vector<std::vector<std::pair<std::string, std::uint32_t>>> doc_terms_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  double avg_length_ = 0.0;
};

inline double bm25_idf(std::size_t doc_count, std::size_t df) {
  const double n = static_cast<double>(doc_count);
  const double f = static_cast<double>(df);
  return std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

/// The probe's terms with tf as query weight, capped at the
/// kMaxDocQueryTerms highest-tf terms (ties by term). Returned term-sorted.
inline std::vector<std::pair<std::string, std::uint32_t>> document_query(
    const LexicalIndex& index, std::uint32_t doc) {
  const auto terms = index.terms(doc);
  std::vector<std::pair<std::string, std::uint32_t>> query(terms.begin(), terms.end());
  if (query.size() > kMaxDocQueryTerms) {
    std::stable_sort(query.begin(), query.end(), [](const auto& a, const auto& b) {
      return a.second > b.second;
    });
    query.resize(kMaxDocQueryTerms);
    std::sort(query.begin(), query.end());
  }
  return query;
}

/// Issues the probe document as a BM25 query and returns the top `k` other
/// documents. Only documents sharing a term with the probe are retrieved.
inline NeighborList bm25_neighbors(const LexicalIndex& index, const DocId& probe,
                                   std::size_t k, const Bm25Params& params = {}) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const auto probe_doc = index.find_doc(probe);
  if (!probe_doc) throw Error("unknown probe document '" + probe + "'");

  std::vector<double> scores(index.doc_count(), 0.0);
  std::vector<bool> hit(index.doc_count(), false);
  const double avg = index.avg_length();
  for (const auto& [term, qtf] : document_query(index, *probe_doc)) {
    const auto postings = index.postings(term);
    const double idf = bm25_idf(index.doc_count(), postings.size());
    for (const auto& p : postings) {
      const double tf = p.tf;
      const double norm =
          params.k1 * (1.0 - params.b + params.b * index.length(p.doc) / avg);
      scores[p.doc] += qtf * idf * tf * (params.k1 + 1.0) / (tf + norm);
      hit[p.doc] = true;
    }
  }

  NeighborList result;
  for (std::uint32_t d = 0; d < index.doc_count(); ++d) {
    if (hit[d] && d != *probe_doc) result.push_back(Neighbor{index.doc_ids()[d], scores[d]});
  }
  const std::size_t keep = std::min(k, result.size());
  std::partial_sort(result.begin(), result.begin() + static_cast<std::ptrdiff_t>(keep),
                    result.end(), neighbor_precedes);
  result.resize(keep);
  return result;
}

/// Exact top-`k` by inner product over the whole store, probe excluded.
inline NeighborList embed_neighbors(const EmbeddingStore& store, const DocId& probe,
                                    std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const auto probe_row = store.row_of(probe);
  if (!probe_row) throw Error("unknown probe document '" + probe + "'");
  const double* q = store.row(*probe_row);

  NeighborList result;
  result.reserve(store.size() - 1);
  for (std::size_t r = 0; r < store.size(); ++r) {
    if (r == *probe_row) continue;
    const double* v = store.row(r);
    double dot = 0.0;
    for (std::size_t j = 0; j < store.dim(); ++j) dot += q[j] * v[j];
    result.push_back(Neighbor{store.ids()[r], dot});
  }
  const std::size_t keep = std::min(k, result.size());
  std::partial_sort(result.begin(), result.begin() + static_cast<std::ptrdiff_t>(keep),
                    result.end(), neighbor_precedes);
  result.resize(keep);
  return result;
}

}  // namespace oneshot
