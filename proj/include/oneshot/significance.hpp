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

// System rankings under a measure, paired t-tests of the top system against
// every other system, and the disagreement of those tests between candidate
// and reference judgments.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oneshot/cwl_measures.hpp"
#include "oneshot/error.hpp"
#include "oneshot/labelers.hpp"
#include "oneshot/student_t.hpp"

namespace oneshot {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t df = 0;
};

/// Paired t-test on a - b. Differences with zero variance (all identical)
/// give t = 0, p = 1.
inline TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("paired_ttest: need aligned vectors of length >= 2");
  }
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  TTestResult r;
  r.df = n - 1;
  if (std::all_of(diff.begin(), diff.end(), [&](double d) { return d == diff.front(); })) {
    return r;
  }
  double mean = 0.0;
  for (const double d : diff) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) return r;
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = student_t_two_sided_p(r.t, static_cast<double>(r.df));
  return r;
}

/// Per-query scores of several systems over one shared, ordered query list.
struct SystemScores {
  std::vector<QueryId> queries;
  std::map<std::string, std::vector<double>> per_query;
  std::map<std::string, double> means;

  void add(const std::string& system_id, std::vector<double> scores) {
    if (scores.size() != queries.size()) {
      throw Error("system '" + system_id + "' is not aligned to the query list");
    }
    if (per_query.count(system_id)) throw Error("duplicate system id '" + system_id + "'");
    double total = 0.0;
    for (const double s : scores) total += s;
    means[system_id] = queries.empty() ? 0.0 : total / static_cast<double>(queries.size());
    per_query.emplace(system_id, std::move(scores));
  }

  std::size_t size() const noexcept { return per_query.size(); }

  /// Systems by mean descending, ties by id ascending.
  std::vector<std::string> ranking() const {
    std::vector<std::string> ids;
    ids.reserve(means.size());
    for (const auto& [id, m] : means) ids.push_back(id);
    std::stable_sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
      return means.at(a) > means.at(b);
    });
    return ids;
  }

  /// Means in system id order.
  std::vector<double> mean_vector() const {
    std::vector<double> out;
    out.reserve(means.size());
    for (const auto& [id, m] : means) out.push_back(m);
    return out;
  }

  const std::string& top() const {
    if (means.empty()) throw Error("no systems");
    const std::string* best = nullptr;
    for (const auto& [id, m] : means) {
      if (!best || m > means.at(*best)) best = &id;
    }
    return *best;
  }
};

/// Evaluates every run over `queries` and collects the per-query values.
inline SystemScores rank_systems(std::span<const Run> runs, const GainTable& table,
                                 const MeasureSpec& measure, std::span<const QueryId> queries) {
  SystemScores scores;
  scores.queries.assign(queries.begin(), queries.end());
  for (const auto& run : runs) {
    const auto result = evaluate(run, table, measure, queries);
    std::vector<double> values;
    values.reserve(queries.size());
    for (const auto& qid : queries) values.push_back(result.per_query.at(qid));
    scores.add(run.system_id, std::move(values));
  }
  return scores;
}

enum class Correction { kBonferroni, kNone };

inline std::string_view correction_name(Correction c) {
  return c == Correction::kBonferroni ? "bonferroni" : "none";
}

inline std::optional<Correction> parse_correction(std::string_view name) {
  if (name == "bonferroni") return Correction::kBonferroni;
  if (name == "none") return Correction::kNone;
  return std::nullopt;
}

struct PairTest {
  std::string system;
  double t = 0.0;
  double p = 1.0;
  bool significant = false;
};

struct SignificanceReport {
  std::string top_system;
  double alpha = 0.05;
  std::size_t comparisons = 0;  // Bonferroni factor m
  double threshold = 0.05;      // alpha / m, or alpha uncorrected
  std::vector<PairTest> tests;  // one per other system, id order

  std::set<std::string> significant_systems() const {
    std::set<std::string> out;
    for (const auto& t : tests) {
      if (t.significant) out.insert(t.system);
    }
    return out;
  }
};

/// Tests `top` (the best system by mean unless given) against every other
/// system. With Bonferroni, a pair is significant iff p < alpha / (S - 1).
inline SignificanceReport significance_report(const SystemScores& scores, double alpha = 0.05,
                                              Correction correction = Correction::kBonferroni,
                                              std::optional<std::string> top = std::nullopt) {
  if (scores.size() < 2) throw Error("significance_report needs at least 2 systems");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  SignificanceReport report;
  report.top_system = top ? *top : scores.top();
  if (!scores.per_query.count(report.top_system)) {
    throw Error("unknown top system '" + report.top_system + "'");
  }
  report.alpha = alpha;
  report.comparisons = scores.size() - 1;
  report.threshold = correction == Correction::kBonferroni
                         ? alpha / static_cast<double>(report.comparisons)
                         : alpha;
  const auto& best = scores.per_query.at(report.top_system);
  for (const auto& [id, values] : scores.per_query) {
    if (id == report.top_system) continue;
    const auto r = paired_ttest(best, values);
    report.tests.push_back(PairTest{id, r.t, r.p, r.p < report.threshold});
  }
  return report;
}

enum class TopFrom { kCandidate, kFull };

/// Confusion of candidate significance decisions against reference ones.
struct TErrorRates {
  std::string top_system;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::optional<double> fpr;  // FP / (FP + TN), absent when undefined
  std::optional<double> fnr;  // FN / (FN + TP), absent when undefined
};

/// Tests the same (top vs. other) pairs under both evaluations, treating the
/// reference outcome as ground truth.
inline TErrorRates t_error_rates(const SystemScores& candidate, const SystemScores& full,
                                 double alpha = 0.05,
                                 Correction correction = Correction::kBonferroni,
                                 TopFrom top_from = TopFrom::kCandidate) {
  if (candidate.queries != full.queries) {
    throw Error("candidate and full evaluations cover different queries");
  }
  std::set<std::string> a;
  std::set<std::string> b;
  for (const auto& [id, v] : candidate.per_query) a.insert(id);
  for (const auto& [id, v] : full.per_query) b.insert(id);
  if (a != b) throw Error("candidate and full evaluations cover different systems");

  TErrorRates rates;
  rates.top_system = top_from == TopFrom::kCandidate ? candidate.top() : full.top();
  const auto cand = significance_report(candidate, alpha, correction, rates.top_system);
  const auto ref = significance_report(full, alpha, correction, rates.top_system);
  for (std::size_t i = 0; i < cand.tests.size(); ++i) {
    const bool predicted = cand.tests[i].significant;
    const bool truth = ref.tests[i].significant;
    if (predicted && truth) ++rates.tp;
    if (predicted && !truth) ++rates.fp;
    if (!predicted && truth) ++rates.fn;
    if (!predicted && !truth) ++rates.tn;
  }
  if (rates.fp + rates.tn > 0) {
    rates.fpr = static_cast<double>(rates.fp) / static_cast<double>(rates.fp + rates.tn);
  }
  if (rates.fn + rates.tp > 0) {
    rates.fnr = static_cast<double>(rates.fn) / static_cast<double>(rates.fn + rates.tp);
  }
  return rates;
}

}  // namespace oneshot
