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

#include "oneshot/labelers.hpp"

#include <gtest/gtest.h>

#include <random>

namespace oneshot {
namespace {

NeighborList numbered_neighbors(std::size_t n) {
  NeighborList list;
  for (std::size_t i = 0; i < n; ++i) {
    list.push_back(Neighbor{"n" + std::to_string(1000 + i), static_cast<double>(n - i)});
  }
  return list;
}

TEST(MaxRepGains, LinearlyDegrading) {
  const auto gains = maxrep_gains(numbered_neighbors(128), 128);
  EXPECT_EQ(gains.at("n1000"), 127.0 / 128.0);
  EXPECT_EQ(gains.at("n1000"), 0.9921875);
  EXPECT_EQ(gains.at("n1127"), 0.0);
  EXPECT_EQ(gains.count("elsewhere"), 0u);
  EXPECT_THROW(maxrep_gains(numbered_neighbors(5), 4), std::invalid_argument);
}

TEST(MaxRepGains, LatticeValues) {
  for (std::size_t k : {1u, 3u, 10u, 128u}) {
    const auto gains = maxrep_gains(numbered_neighbors(k), k);
    for (const auto& [doc, g] : gains) {
      const double scaled = g * static_cast<double>(k);
      EXPECT_EQ(scaled, std::round(scaled));
      EXPECT_GE(g, 0.0);
      EXPECT_LT(g, 1.0);
    }
  }
}

struct Fixture {
  ShallowPool pool;
  HoleSet holes;
  Qrels reference;
  TextMap texts;
  TextMap queries;

  Fixture() {
    for (int q = 0; q < 6; ++q) {
      const auto qid = "q" + std::to_string(q);
      pool.entries[qid] = PoolEntry{"d" + std::to_string(q * 2), 1};
      queries[qid] = "query text " + std::to_string(q);
      for (int d = 0; d < 12; ++d) {
        const auto did = "d" + std::to_string(d);
        if (did != pool.entries[qid].rel_doc_id) holes.holes.emplace(qid, did);
        reference.grades[qid][did] = (q + d) % 4;
      }
    }
    holes.depth = 12;
    const char* words[] = {"river", "bank", "money", "loan", "fish", "boat", "rate"};
    for (int d = 0; d < 12; ++d) {
      std::string text;
      for (int w = 0; w < 5; ++w) text += std::string(words[(d * 3 + w * w) % 7]) + " ";
      texts["d" + std::to_string(d)] = text;
    }
  }
};

TEST(Label, ZeroLabelerReproducesBaseline) {
  const Fixture f;
  const auto records = label(ZeroLabeler{}, f.pool, f.holes);
  ASSERT_EQ(records.size(), f.holes.size());
  for (const auto& r : records) {
    EXPECT_EQ(r.score, 0.0);
    EXPECT_EQ(r.labeler, "zero");
    EXPECT_EQ(r.rel_docid, *f.pool.rel_doc(r.qid));
  }
}

TEST(Label, OracleNormalizesByMaxGrade) {
  const Fixture f;
  const auto records = label(OracleLabeler{f.reference}, f.pool, f.holes);
  const std::set<double> allowed = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  std::set<double> seen;
  for (const auto& r : records) {
    EXPECT_TRUE(allowed.count(r.score)) << r.score;
    EXPECT_EQ(r.score, *f.reference.grade(r.qid, r.unk_docid) / 3.0);
    seen.insert(r.score);
  }
  EXPECT_EQ(seen, allowed);
}

TEST(Label, CanonicalOrderAcrossThreadCounts) {
  const Fixture f;
  const LexicalIndex index(f.texts);
  const auto labeler = make_maxrep_bm25(index, 4);
  LabelOptions one;
  const auto reference = label(*labeler, f.pool, f.holes, one);
  EXPECT_TRUE(std::is_sorted(reference.begin(), reference.end(), canonical_less));
  for (std::size_t threads : {2u, 3u, 8u, 64u}) {
    LabelOptions opts;
    opts.threads = threads;
    EXPECT_EQ(label(*labeler, f.pool, f.holes, opts), reference) << threads;
  }
}

TEST(Label, MaxRepIgnoresQueryText) {
  const Fixture f;
  const LexicalIndex index(f.texts);
  const auto labeler = make_maxrep_bm25(index, 5);
  LabelOptions opts;
  opts.queries = &f.queries;
  const auto base = label(*labeler, f.pool, f.holes, opts);

  TextMap permuted;
  std::vector<std::string> texts;
  for (const auto& [q, t] : f.queries) texts.push_back(t);
  std::rotate(texts.begin(), texts.begin() + 1, texts.end());
  std::size_t i = 0;
  for (const auto& [q, t] : f.queries) permuted[q] = texts[i++];
  opts.queries = &permuted;
  EXPECT_EQ(label(*labeler, f.pool, f.holes, opts), base);
}

TEST(Label, MaxRepScoresOnLattice) {
  const Fixture f;
  const LexicalIndex index(f.texts);
  const std::size_t k = 8;
  const auto records = label(*make_maxrep_bm25(index, k), f.pool, f.holes);
  for (const auto& r : records) {
    const double scaled = r.score * k;
    EXPECT_EQ(scaled, std::round(scaled));
    EXPECT_LE(r.score, (k - 1.0) / k);
  }
  // The neighbor list of d+ decides the scores.
  const auto neighbors = bm25_neighbors(index, "d0", k);
  const auto gains = maxrep_gains(neighbors, k);
  for (const auto& r : records) {
    if (r.qid != "q0") continue;
    const auto it = gains.find(r.unk_docid);
    EXPECT_EQ(r.score, it == gains.end() ? 0.0 : it->second);
  }
}

TEST(Label, EmbeddingVariant) {
  ShallowPool pool;
  pool.entries["q1"] = PoolEntry{"a", 1};
  HoleSet holes;
  holes.holes = {{"q1", "b"}, {"q1", "c"}, {"q1", "d"}};
  const auto store = EmbeddingStore::from_vectors(
      {{"a", {1.0, 0.0}}, {"b", {0.9, 0.1}}, {"c", {0.0, 1.0}}, {"d", {0.5, 0.5}}});
  const auto records = label(*make_maxrep_embed(store, 2), pool, holes);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].score, 0.5);  // b: first neighbor, (2-1)/2
  EXPECT_EQ(records[1].score, 0.0);  // c: not a neighbor
  EXPECT_EQ(records[2].score, 0.0);  // d: second neighbor, (2-2)/2
}

TEST(Label, BridgeMissingPairsAreErrors) {
  const Fixture f;
  std::map<QueryDoc, double> scores;
  for (const auto& h : f.holes.holes) scores[h] = 0.25;
  scores.erase({"q1", "d0"});
  scores.erase({"q4", "d7"});
  scores.erase({"q5", "d11"});
  try {
    label(CachedLabeler{"bridge:x", scores}, f.pool, f.holes);
    FAIL() << "expected MissingScoresError";
  } catch (const MissingScoresError& e) {
    EXPECT_EQ(e.missing(),
              (std::vector<QueryDoc>{{"q1", "d0"}, {"q4", "d7"}, {"q5", "d11"}}));
  }
  scores[{"q1", "d0"}] = 1.0;
  scores[{"q4", "d7"}] = 0.0;
  scores[{"q5", "d11"}] = 0.5;
  const auto records = label(CachedLabeler{"bridge:x", scores}, f.pool, f.holes);
  for (const auto& r : records) EXPECT_EQ(r.score, scores.at({r.qid, r.unk_docid}));
}

TEST(Label, PinnedPairsScoreZero) {
  const Fixture f;
  const std::set<QueryDoc> pinned = {{"q2", "d1"}};
  LabelOptions opts;
  opts.pinned_zero = &pinned;
  std::map<QueryDoc, double> scores;
  for (const auto& h : f.holes.holes) scores[h] = 0.9;
  scores.erase({"q2", "d1"});  // pinned pairs need no estimate
  const auto records = label(CachedLabeler{"c", scores}, f.pool, f.holes, opts);
  for (const auto& r : records) {
    EXPECT_EQ(r.score, (r.qid == "q2" && r.unk_docid == "d1") ? 0.0 : 0.9);
  }
}

TEST(Label, HoleOutsidePool) {
  ShallowPool pool;
  HoleSet holes;
  holes.holes = {{"q9", "d1"}};
  EXPECT_THROW(label(ZeroLabeler{}, pool, holes), Error);
}

TEST(BuildGainTable, AppliesKnownRelevantAndScores) {
  ShallowPool pool;
  pool.entries["q1"] = PoolEntry{"dB", 2};
  const std::vector<ScoreRecord> records = {{"L", "q1", "dB", "dA", 0.4},
                                            {"other", "q1", "dB", "dC", 0.9}};
  const auto table = build_gain_table(pool, records, "L");
  EXPECT_EQ(table.gains.at("q1"), (std::map<DocId, double>{{"dB", 1.0}, {"dA", 0.4}}));
  EXPECT_EQ(table.gain("q1", "dC"), 0.0);
}

TEST(BuildGainTable, NoRecordsGivesBaseline) {
  ShallowPool pool;
  pool.entries["q1"] = PoolEntry{"dB", 2};
  pool.entries["q2"] = PoolEntry{"dZ", 1};
  const auto table = build_gain_table(pool, {}, "L");
  EXPECT_EQ(table.gains.at("q1"), (std::map<DocId, double>{{"dB", 1.0}}));
  EXPECT_EQ(table.gains.at("q2"), (std::map<DocId, double>{{"dZ", 1.0}}));
}

TEST(BuildGainTable, RejectsOverwritingKnownRelevant) {
  ShallowPool pool;
  pool.entries["q1"] = PoolEntry{"dB", 2};
  const std::vector<ScoreRecord> overwrite = {{"L", "q1", "dB", "dB", 0.9}};
  EXPECT_THROW(build_gain_table(pool, overwrite, "L"), Error);
  const std::vector<ScoreRecord> stale = {{"L", "q1", "dOld", "dA", 0.9}};
  EXPECT_THROW(build_gain_table(pool, stale, "L"), Error);
  const std::vector<ScoreRecord> outside = {{"L", "q2", "dB", "dA", 0.9}};
  EXPECT_THROW(build_gain_table(pool, outside, "L"), Error);
}

TEST(GainTableFromQrels, NormalizedByMaxGrade) {
  Qrels q;
  q.grades["q1"] = {{"a", 3}, {"b", 1}, {"c", 0}};
  const auto t = gain_table_from_qrels(q);
  EXPECT_EQ(t.gain("q1", "a"), 1.0);
  EXPECT_EQ(t.gain("q1", "b"), 1.0 / 3.0);
  EXPECT_EQ(t.gain("q1", "c"), 0.0);
}

TEST(LabelerSpec, Parse) {
  EXPECT_EQ(parse_labeler_spec("zero")->kind, LabelerSpec::Kind::kZero);
  EXPECT_EQ(parse_labeler_spec("oracle")->id(), "oracle");
  EXPECT_EQ(parse_labeler_spec("maxrep-bm25")->id(), "maxrep-bm25");
  EXPECT_EQ(parse_labeler_spec("maxrep-embed")->id(), "maxrep-embed");
  const auto bridge = parse_labeler_spec("bridge:scores/duo.jsonl");
  ASSERT_TRUE(bridge);
  EXPECT_EQ(bridge->bridge_path, "scores/duo.jsonl");
  EXPECT_FALSE(parse_labeler_spec("bridge:"));
  EXPECT_FALSE(parse_labeler_spec("duot5"));
}

}  // namespace
}  // namespace oneshot
