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

// Recall-agnostic C/W/L measures over partial gains: SDCG@k, weighted
// precision WP@k and rank-biased precision RBP(p).

#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oneshot/labelers.hpp"
#include "oneshot/trec_io.hpp"

namespace oneshot {

/// Gains of a query's ranked documents, in run order.
inline std::vector<double> gains_for(const Run& run, const GainTable& table,
                                     const QueryId& qid) {
  std::vector<double> out;
  const auto it = run.rankings.find(qid);
  if (it == run.rankings.end()) return out;
  const auto row = table.gains.find(qid);
  out.reserve(it->second.size());
  for (const auto& doc : it->second) {
    double g = 0.0;
    if (row != table.gains.end()) {
      const auto d = row->second.find(doc.doc_id);
      if (d != row->second.end()) g = d->second;
    }
    out.push_back(g);
  }
  return out;
}

/// DCG@k normalized by the DCG of k fully relevant documents. The normalizer
/// always spans k ranks, so short rankings are not rescaled.
inline double sdcg(std::span<const double> gains, std::size_t k = 10) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  double dcg = 0.0;
  double ideal = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double discount = 1.0 / std::log2(static_cast<double>(i) + 2.0);
    ideal += discount;
    if (i < gains.size()) dcg += gains[i] * discount;
  }
  return dcg / ideal;
}

/// Mean gain over the top k ranks; the denominator is k even when the
/// ranking is shorter.
inline double weighted_precision(std::span<const double> gains, std::size_t k = 10) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  double total = 0.0;
  const std::size_t n = std::min(k, gains.size());
  for (std::size_t i = 0; i < n; ++i) total += gains[i];
  return total / static_cast<double>(k);
}

/// Base RBP over the finite ranking, without the residual. Truncating the
/// ranking after m documents lowers the value by at most p^m.
inline double rbp(std::span<const double> gains, double p = 0.8) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("RBP persistence must be in (0,1)");
  double total = 0.0;
  double weight = 1.0;
  for (const double g : gains) {
    total += weight * g;
    weight *= p;
  }
  return (1.0 - p) * total;
}

struct MeasureSpec {
  enum class Kind { kSdcg, kWeightedPrecision, kRbp };

  Kind kind = Kind::kSdcg;
  std::size_t depth = 10;  // SDCG, WP
  double persistence = 0.8;  // RBP

  /// Canonical text form, e.g. `SDCG@10`, `WP@10`, `RBP(p=0.8)`.
  std::string id() const {
    switch (kind) {
      case Kind::kSdcg: return "SDCG@" + std::to_string(depth);
      case Kind::kWeightedPrecision: return "WP@" + std::to_string(depth);
      case Kind::kRbp: return "RBP(p=" + format_real(persistence) + ")";
    }
    return {};
  }

  double compute(std::span<const double> gains) const {
    switch (kind) {
      case Kind::kSdcg: return sdcg(gains, depth);
      case Kind::kWeightedPrecision: return weighted_precision(gains, depth);
      case Kind::kRbp: return rbp(gains, persistence);
    }
    return 0.0;
  }

  friend bool operator==(const MeasureSpec&, const MeasureSpec&) = default;
};

inline std::optional<MeasureSpec> parse_measure_spec(std::string_view text) {
  const auto depth_of = [](std::string_view digits) -> std::optional<std::size_t> {
    const auto v = detail::parse_integer(digits);
    if (!v || *v < 1 || digits.empty() || digits.front() == '+') return std::nullopt;
    return static_cast<std::size_t>(*v);
  };
  if (text.rfind("SDCG@", 0) == 0) {
    const auto d = depth_of(text.substr(5));
    if (!d) return std::nullopt;
    return MeasureSpec{MeasureSpec::Kind::kSdcg, *d, 0.8};
  }
  if (text.rfind("WP@", 0) == 0) {
    const auto d = depth_of(text.substr(3));
    if (!d) return std::nullopt;
    return MeasureSpec{MeasureSpec::Kind::kWeightedPrecision, *d, 0.8};
  }
  if (text.rfind("RBP(p=", 0) == 0 && text.size() > 7 && text.back() == ')') {
    const auto p = detail::parse_real(text.substr(6, text.size() - 7));
    if (!p || !(*p > 0.0 && *p < 1.0)) return std::nullopt;
    return MeasureSpec{MeasureSpec::Kind::kRbp, 10, *p};
  }
  return std::nullopt;
}

struct EvalResult {
  std::string measure_id;
  std::map<QueryId, double> per_query;
  double mean = 0.0;
};

/// Scores a run over exactly `queries`; a query the run lacks scores 0 and
/// still counts toward the mean.
inline EvalResult evaluate(const Run& run, const GainTable& table, const MeasureSpec& measure,
                           std::span<const QueryId> queries) {
  EvalResult result;
  result.measure_id = measure.id();
  double total = 0.0;
  for (const auto& qid : queries) {
    const auto gains = gains_for(run, table, qid);
    const double value = measure.compute(gains);
    result.per_query[qid] = value;
    total += value;
  }
  if (!queries.empty()) result.mean = total / static_cast<double>(queries.size());
  return result;
}

}  // namespace oneshot
