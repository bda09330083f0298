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
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "oneshot/error.hpp"
#include "oneshot/trec_io.hpp"

namespace oneshot {

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision-recall points at every distinct score (descending thresholds),
/// rank-based average precision and the best F1 over those thresholds.
struct PRCurve {
  std::vector<PrPoint> points;
  double average_precision = 0.0;
  double best_f1 = 0.0;
  double best_f1_threshold = 0.0;
};

struct PrAnalysis {
  PRCurve curve;
  std::size_t judged = 0;     // scored pairs with a reference grade
  std::size_t relevant = 0;   // of which grade >= threshold
  std::size_t unjudged = 0;   // scored pairs excluded for lack of a grade
};

/// Treats labeler scores as a classifier of binary relevance
/// (grade >= rel_threshold). Items are ordered by score descending, equal
/// scores by document id then query id.
inline PrAnalysis labeler_pr_analysis(std::span<const ScoreRecord> records,
                                      const Qrels& reference, int rel_threshold) {
  struct Item {
    double score;
    const DocId* doc;
    const QueryId* query;
    bool relevant;
  };
  PrAnalysis out;
  std::vector<Item> items;
  items.reserve(records.size());
  for (const auto& r : records) {
    const auto g = reference.grade(r.qid, r.unk_docid);
    if (!g) {
      ++out.unjudged;
      continue;
    }
    items.push_back(Item{r.score, &r.unk_docid, &r.qid, *g >= rel_threshold});
  }
  out.judged = items.size();
  for (const auto& it : items) out.relevant += it.relevant ? 1 : 0;
  if (out.relevant == 0) throw Error("no relevant items among the judged scored pairs");

  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(*a.doc, *a.query) < std::tie(*b.doc, *b.query);
  });

  const double total_relevant = static_cast<double>(out.relevant);
  std::size_t hits = 0;
  double ap_sum = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].relevant) continue;
    ++hits;
    ap_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  out.curve.average_precision = ap_sum / total_relevant;

  std::size_t tp = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) {
      tp += items[j].relevant ? 1 : 0;
      ++j;
    }
    const double predicted = static_cast<double>(j);
    PrPoint point{items[i].score, static_cast<double>(tp) / predicted,
                  static_cast<double>(tp) / total_relevant};
    out.curve.points.push_back(point);
    const double f1 = 2.0 * static_cast<double>(tp) / (predicted + total_relevant);
    if (f1 > out.curve.best_f1) {
      out.curve.best_f1 = f1;
      out.curve.best_f1_threshold = items[i].score;
    }
    i = j;
  }
  return out;
}

}  // namespace oneshot
