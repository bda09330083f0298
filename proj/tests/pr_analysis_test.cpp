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

#include "oneshot/pr_analysis.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

namespace oneshot {
namespace {

using namespace oracles;

ScoreRecord record(const std::string& qid, const std::string& doc, double score) {
  return ScoreRecord{"test", qid, "drel", doc, score};
}

TEST(PrAnalysis, ThreeItemFixture) {
  Qrels ref;
  ref.grades["q"]["a"] = 2;
  ref.grades["q"]["b"] = 0;
  ref.grades["q"]["c"] = 3;
  const std::vector<ScoreRecord> records = {record("q", "a", 0.9), record("q", "b", 0.8),
                                            record("q", "c", 0.7)};
  const auto pr = labeler_pr_analysis(records, ref, 2);
  EXPECT_NEAR(pr.curve.average_precision, 0.8333, 1e-4);
  EXPECT_EQ(pr.curve.best_f1, 0.8);
  EXPECT_EQ(pr.curve.best_f1_threshold, 0.7);
  ASSERT_EQ(pr.curve.points.size(), 3u);
  EXPECT_EQ(pr.curve.points[0].precision, 1.0);
  EXPECT_EQ(pr.curve.points[0].recall, 0.5);
  EXPECT_EQ(pr.relevant, 2u);
  EXPECT_EQ(pr.judged, 3u);
}

TEST(PrAnalysis, PerfectScorer) {
  Qrels ref;
  std::vector<ScoreRecord> records;
  for (int i = 0; i < 10; ++i) {
    const std::string doc = "d" + std::to_string(i);
    ref.grades["q"][doc] = i < 4 ? 3 : 0;
    records.push_back(record("q", doc, i < 4 ? 0.9 - 0.01 * i : 0.1 * (4 - i / 3)));
  }
  const auto pr = labeler_pr_analysis(records, ref, 1);
  EXPECT_EQ(pr.curve.average_precision, 1.0);
  EXPECT_EQ(pr.curve.best_f1, 1.0);
}

TEST(PrAnalysis, UnjudgedAndNoRelevant) {
  Qrels ref;
  ref.grades["q"]["a"] = 0;
  const std::vector<ScoreRecord> records = {record("q", "a", 0.9), record("q", "x", 0.8)};
  EXPECT_THROW(labeler_pr_analysis(records, ref, 1), Error);
  ref.grades["q"]["b"] = 1;
  const std::vector<ScoreRecord> more = {record("q", "a", 0.9), record("q", "x", 0.8),
                                         record("q", "b", 0.1)};
  const auto pr = labeler_pr_analysis(more, ref, 1);
  EXPECT_EQ(pr.unjudged, 1u);
  EXPECT_EQ(pr.judged, 2u);
  EXPECT_EQ(pr.curve.average_precision, 0.5);
}

TEST(PrAnalysis, MatchesSweepOracle) {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    Qrels ref;
    std::vector<ScoreRecord> records;
    std::vector<double> scores;
    std::vector<bool> labels;
    std::vector<std::pair<std::string, std::string>> keys;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string q = "q" + std::to_string(rng() % 3);
      const std::string d = "d" + std::to_string(i);
      const int grade = static_cast<int>(rng() % 4);
      const double score = static_cast<double>(rng() % 9) / 8.0;  // ties on purpose
      ref.grades[q][d] = grade;
      records.push_back(record(q, d, score));
      scores.push_back(score);
      labels.push_back(grade >= 2);
      keys.emplace_back(d, q);
    }
    if (std::none_of(labels.begin(), labels.end(), [](bool b) { return b; })) continue;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return keys[a] < keys[b];
    });
    const auto expected = sweep_oracle(scores, labels, order);
    const auto pr = labeler_pr_analysis(records, ref, 2);
    EXPECT_NEAR(pr.curve.average_precision, expected.ap, 1e-9);
    EXPECT_NEAR(pr.curve.best_f1, expected.best_f1, 1e-9);
  }
}

}  // namespace
}  // namespace oneshot
