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

// Batch command-line pipeline: simulate-pool, label, evaluate, compare and
// pr-curve. Configuration comes from an optional JSON file of flat keys;
// every key is also a command-line flag, and flags win.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "oneshot/oneshot.hpp"

namespace oneshot::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;
inline constexpr const char* kCacheDirEnv = "ONESHOT_CACHE_DIR";

/// Bad configuration or command line; exits with status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

enum class KeyType { kString, kInt, kReal, kBool };

struct KeyInfo {
  const char* name;
  KeyType type;
  const char* fallback;  // default value as text; empty for "unset"
  const char* help;
};

inline const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = {
      {"corpus", KeyType::kString, "", "passage collection (TSV or JSON lines)"},
      {"queries", KeyType::kString, "", "query texts (TSV or JSON lines)"},
      {"corpus_format", KeyType::kString, "auto", "auto | tsv | jsonl"},
      {"embeddings", KeyType::kString, "", "JSON-lines embedding store"},
      {"qrels", KeyType::kString, "", "judgments the shallow pool is simulated from"},
      {"full_qrels", KeyType::kString, "", "reference judgments (defaults to qrels)"},
      {"baseline", KeyType::kString, "", "baseline run that supplies d+"},
      {"runs", KeyType::kString, "", "directory of run files, or a single run file"},
      {"pool", KeyType::kString, "", "pool qrels written by simulate-pool"},
      {"cache_dir", KeyType::kString, "", "score cache directory"},
      {"labeler", KeyType::kString, "zero",
       "zero | oracle | maxrep-bm25 | maxrep-embed | bridge:<score file>"},
      {"measures", KeyType::kString, "SDCG@10,WP@10,RBP(p=0.8)", "comma-separated measures"},
      {"rel_threshold", KeyType::kInt, "2", "minimum grade counted as relevant"},
      {"depth", KeyType::kInt, "10", "hole depth for labeling and evaluation"},
      {"pr_depth", KeyType::kInt, "100", "hole depth for pr-curve"},
      {"maxrep_k", KeyType::kInt, "128", "MaxRep neighbor count"},
      {"bm25_k1", KeyType::kReal, "0.9", "BM25 k1"},
      {"bm25_b", KeyType::kReal, "0.4", "BM25 b"},
      {"alpha", KeyType::kReal, "0.05", "significance level"},
      {"rbo_p", KeyType::kReal, "0.9", "RBO persistence"},
      {"correction", KeyType::kString, "bonferroni", "bonferroni | none"},
      {"top_from_full", KeyType::kBool, "false",
       "identify the top system under the reference evaluation"},
      {"pin_examined_nonrelevant", KeyType::kBool, "false",
       "score baseline documents ranked above d+ as 0"},
      {"output_dir", KeyType::kString, "out", "output directory"},
      {"task_file", KeyType::kString, "", "bridge task file (default <output_dir>/bridge_tasks.jsonl)"},
      {"threads", KeyType::kInt, "1", "worker threads (does not affect outputs)"},
  };
  return keys;
}

inline std::string flag_name(std::string_view key) {
  std::string flag = "--";
  for (const char c : key) flag += c == '_' ? '-' : c;
  return flag;
}

/// Fully resolved job configuration.
struct JobConfig {
  std::string corpus;
  std::string queries;
  std::string corpus_format = "auto";
  std::string embeddings;
  std::string qrels;
  std::string full_qrels;
  std::string baseline;
  std::string runs;
  std::string pool;
  std::string cache_dir;
  LabelerSpec labeler;
  std::vector<MeasureSpec> measures;
  int rel_threshold = 2;
  std::size_t depth = 10;
  std::size_t pr_depth = 100;
  std::size_t maxrep_k = kDefaultMaxRepDepth;
  Bm25Params bm25;
  double alpha = 0.05;
  double rbo_p = 0.9;
  Correction correction = Correction::kBonferroni;
  bool top_from_full = false;
  bool pin_examined_nonrelevant = false;
  std::string output_dir = "out";
  std::string task_file;
  std::size_t threads = 1;

  std::string labeler_id() const {
    std::string id = labeler.id();
    if (pin_examined_nonrelevant) id += "+pin-examined";
    return id;
  }

  std::string reference_qrels() const { return full_qrels.empty() ? qrels : full_qrels; }

  fs::path cache_file() const { return fs::path(cache_dir) / "scores.jsonl"; }

  /// Everything that can influence results, in key order. `threads` is left
  /// out: it never changes outputs.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["alpha"] = alpha;
    j["baseline"] = baseline;
    j["bm25_b"] = bm25.b;
    j["bm25_k1"] = bm25.k1;
    j["cache_dir"] = cache_dir;
    j["corpus"] = corpus;
    j["corpus_format"] = corpus_format;
    j["correction"] = std::string(correction_name(correction));
    j["depth"] = depth;
    j["embeddings"] = embeddings;
    j["full_qrels"] = reference_qrels();
    j["labeler"] = labeler.id();
    j["maxrep_k"] = maxrep_k;
    nlohmann::ordered_json ms = nlohmann::ordered_json::array();
    for (const auto& m : measures) ms.push_back(m.id());
    j["measures"] = ms;
    j["output_dir"] = output_dir;
    j["pin_examined_nonrelevant"] = pin_examined_nonrelevant;
    j["pool"] = pool;
    j["pr_depth"] = pr_depth;
    j["qrels"] = qrels;
    j["queries"] = queries;
    j["rbo_p"] = rbo_p;
    j["rel_threshold"] = rel_threshold;
    j["runs"] = runs;
    j["task_file"] = task_file;
    j["top_from_full"] = top_from_full;
    return j;
  }
};

namespace detail {

inline std::string json_to_text(const std::string& key, const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_number()) return format_real(value.get<double>());
  if (value.is_array()) {
    std::string joined;
    for (const auto& item : value) {
      if (!item.is_string()) throw UsageError("config key '" + key + "': expected strings");
      if (!joined.empty()) joined += ',';
      joined += item.get<std::string>();
    }
    return joined;
  }
  throw UsageError("config key '" + key + "': unsupported value type");
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  int depth = 0;
  for (const char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else if (c != ' ') {
      current += c;
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

inline long long to_int(const std::string& key, const std::string& text, long long min) {
  const auto v = oneshot::detail::parse_integer(text);
  if (!v || *v < min) {
    throw UsageError("invalid value for " + key + ": '" + text + "' (integer >= " +
                     std::to_string(min) + " expected)");
  }
  return *v;
}

inline double to_real(const std::string& key, const std::string& text) {
  const auto v = oneshot::detail::parse_real(text);
  if (!v) throw UsageError("invalid value for " + key + ": '" + text + "'");
  return *v;
}

inline bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw UsageError("invalid value for " + key + ": '" + text + "' (true/false expected)");
}

}  // namespace detail

/// Merges defaults, the optional config file and flag overrides (in that
/// order of precedence, lowest first) into a typed configuration.
inline JobConfig resolve_config(const std::string& config_path,
                                const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> values;
  for (const auto& k : config_keys()) values[k.name] = k.fallback;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config file '" + config_path + "'");
    nlohmann::json file;
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("config file '" + config_path + "': " + e.what());
    }
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (!values.count(key)) throw UsageError("unknown config key '" + key + "'");
      values[key] = detail::json_to_text(key, value);
    }
  }
  const bool cache_dir_given = !values["cache_dir"].empty() || overrides.count("cache_dir");
  for (const auto& [key, value] : overrides) {
    if (!values.count(key)) throw UsageError("unknown option '" + key + "'");
    values[key] = value;
  }

  JobConfig c;
  c.corpus = values["corpus"];
  c.queries = values["queries"];
  c.corpus_format = values["corpus_format"];
  if (c.corpus_format != "auto" && !parse_text_format(c.corpus_format)) {
    throw UsageError("invalid corpus_format '" + c.corpus_format + "'");
  }
  c.embeddings = values["embeddings"];
  c.qrels = values["qrels"];
  c.full_qrels = values["full_qrels"];
  c.baseline = values["baseline"];
  c.runs = values["runs"];
  c.pool = values["pool"];
  c.output_dir = values["output_dir"];
  if (c.output_dir.empty()) throw UsageError("output_dir must not be empty");
  c.cache_dir = values["cache_dir"];
  if (!cache_dir_given) {
    const char* env = std::getenv(kCacheDirEnv);
    c.cache_dir = (env && *env) ? std::string(env) : (fs::path(c.output_dir) / "cache").string();
  }
  const auto labeler = parse_labeler_spec(values["labeler"]);
  if (!labeler) throw UsageError("unknown labeler '" + values["labeler"] + "'");
  c.labeler = *labeler;
  for (const auto& m : detail::split_list(values["measures"])) {
    const auto spec = parse_measure_spec(m);
    if (!spec) throw UsageError("unknown measure '" + m + "'");
    c.measures.push_back(*spec);
  }
  if (c.measures.empty()) throw UsageError("no measures given");
  c.rel_threshold = static_cast<int>(detail::to_int("rel_threshold", values["rel_threshold"], 1));
  c.depth = static_cast<std::size_t>(detail::to_int("depth", values["depth"], 1));
  c.pr_depth = static_cast<std::size_t>(detail::to_int("pr_depth", values["pr_depth"], 1));
  c.maxrep_k = static_cast<std::size_t>(detail::to_int("maxrep_k", values["maxrep_k"], 1));
  c.threads = static_cast<std::size_t>(detail::to_int("threads", values["threads"], 1));
  c.bm25.k1 = detail::to_real("bm25_k1", values["bm25_k1"]);
  c.bm25.b = detail::to_real("bm25_b", values["bm25_b"]);
  if (c.bm25.k1 < 0.0 || c.bm25.b < 0.0 || c.bm25.b > 1.0) {
    throw UsageError("BM25 parameters out of range");
  }
  c.alpha = detail::to_real("alpha", values["alpha"]);
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw UsageError("alpha must be in (0,1)");
  c.rbo_p = detail::to_real("rbo_p", values["rbo_p"]);
  if (!(c.rbo_p > 0.0 && c.rbo_p < 1.0)) throw UsageError("rbo_p must be in (0,1)");
  const auto correction = parse_correction(values["correction"]);
  if (!correction) throw UsageError("unknown correction '" + values["correction"] + "'");
  c.correction = *correction;
  c.top_from_full = detail::to_bool("top_from_full", values["top_from_full"]);
  c.pin_examined_nonrelevant =
      detail::to_bool("pin_examined_nonrelevant", values["pin_examined_nonrelevant"]);
  c.task_file = values["task_file"];
  if (c.task_file.empty()) c.task_file = (fs::path(c.output_dir) / "bridge_tasks.jsonl").string();
  return c;
}

// ---------------------------------------------------------------------------
// File helpers

/// Writes via a temporary sibling and renames it into place.
inline void write_file_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

inline void require_path(const std::string& key, const std::string& path) {
  if (path.empty()) throw UsageError("missing required setting '" + key + "'");
  if (!fs::exists(path)) {
    throw UsageError(key + ": path does not exist: " + path);
  }
}

inline std::ifstream open_input(const std::string& key, const std::string& path) {
  require_path(key, path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(key + ": cannot open " + path);
  return in;
}

inline std::string slug(std::string_view text) {
  std::string out;
  for (const char c : text) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '.' || c == '-';
    out += keep ? c : '_';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inputs, loaded and validated before any computation

struct Inputs {
  std::optional<Run> baseline;
  std::optional<Qrels> qrels;
  std::optional<Qrels> reference;
  std::vector<Run> runs;
  std::optional<Corpus> corpus;
  std::optional<EmbeddingStore> embeddings;
  std::optional<ShallowPool> pool;
  std::optional<ScoreCache> cache;
  std::optional<std::vector<BridgeScore>> bridge;
};

inline Run load_run_file(const std::string& key, const std::string& path) {
  auto in = open_input(key, path);
  return parse_run(in, path);
}

inline Qrels load_qrels_file(const std::string& key, const std::string& path) {
  auto in = open_input(key, path);
  return parse_qrels(in, path);
}

inline std::vector<Run> load_runs(const std::string& path) {
  require_path("runs", path);
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.emplace_back(path);
  }
  if (files.empty()) throw UsageError("runs: no run files in " + path);
  std::vector<Run> runs;
  std::set<std::string> ids;
  for (const auto& f : files) {
    runs.push_back(load_run_file("runs", f.string()));
    if (!ids.insert(runs.back().system_id).second) {
      throw Error("duplicate system id '" + runs.back().system_id + "' in " + f.string());
    }
  }
  return runs;
}

inline TextFormat format_for(const JobConfig& c, const std::string& path) {
  if (c.corpus_format == "auto") return text_format_for_path(path);
  return *parse_text_format(c.corpus_format);
}

inline fs::path pool_sidecar(const std::string& pool_path) {
  fs::path p(pool_path);
  if (p.extension() == ".qrels") return p.replace_extension(".examined.json");
  p += ".examined.json";
  return p;
}

struct Needs {
  bool runs = false;
  bool pool = false;       // pool file, or baseline + qrels to simulate one
  bool reference = false;  // full judgments
  bool scores = false;     // everything the labeler needs
};

inline Inputs load_inputs(const JobConfig& c, const Needs& needs) {
  Inputs in;
  if (needs.pool) {
    if (!c.pool.empty()) {
      auto qrels_in = open_input("pool", c.pool);
      const auto sidecar = pool_sidecar(c.pool).string();
      auto examined_in = open_input("pool (examined sidecar)", sidecar);
      in.pool = read_pool(qrels_in, examined_in);
    } else {
      in.baseline = load_run_file("baseline", c.baseline);
      in.qrels = load_qrels_file("qrels", c.qrels);
    }
  }
  if (needs.runs) in.runs = load_runs(c.runs);

  const auto kind = c.labeler.kind;
  const bool needs_reference =
      needs.reference || (needs.scores && kind == LabelerSpec::Kind::kOracle);
  if (needs_reference) {
    if (!c.full_qrels.empty()) {
      in.reference = load_qrels_file("full_qrels", c.full_qrels);
    } else if (in.qrels) {
      in.reference = in.qrels;
    } else {
      in.reference = load_qrels_file("qrels", c.qrels);
    }
  }
  if (needs.scores && c.pin_examined_nonrelevant && !in.baseline) {
    in.baseline = load_run_file("baseline", c.baseline);
  }
  if (needs.scores) {
    if (kind == LabelerSpec::Kind::kMaxRepBm25) require_path("corpus", c.corpus);
    if (kind == LabelerSpec::Kind::kMaxRepEmbed) {
      auto e = open_input("embeddings", c.embeddings);
      in.embeddings = load_embeddings(e, c.embeddings);
    }
    const bool want_texts =
        kind == LabelerSpec::Kind::kMaxRepBm25 ||
        (kind == LabelerSpec::Kind::kBridge && !c.corpus.empty());
    if (want_texts) {
      Corpus corpus;
      auto docs = open_input("corpus", c.corpus);
      corpus.texts = load_texts(docs, format_for(c, c.corpus), TextKind::kDocuments, c.corpus);
      if (!c.queries.empty()) {
        auto qs = open_input("queries", c.queries);
        corpus.queries =
            load_texts(qs, format_for(c, c.queries), TextKind::kQueries, c.queries);
      }
      in.corpus = std::move(corpus);
    }
    if (kind == LabelerSpec::Kind::kBridge && fs::exists(c.labeler.bridge_path)) {
      std::ifstream b(c.labeler.bridge_path, std::ios::binary);
      in.bridge = read_bridge_scores(b, c.labeler.bridge_path);
    }
    const auto cache_path = c.cache_file();
    if (fs::exists(cache_path)) {
      std::ifstream cf(cache_path, std::ios::binary);
      in.cache = read_score_cache(cf, cache_path.string());
    } else {
      in.cache = ScoreCache{};
    }
  }
  return in;
}

struct PoolState {
  ShallowPool pool;
  std::optional<PoolSimulation> simulation;
};

inline PoolState pool_from(const JobConfig& c, const Inputs& in) {
  PoolState state;
  if (in.pool) {
    state.pool = *in.pool;
  } else {
    state.simulation = simulate_shallow_pool(*in.baseline, *in.qrels, c.rel_threshold);
    state.pool = state.simulation->pool;
  }
  return state;
}

// ---------------------------------------------------------------------------
// Score resolution: cache first, labeler for the rest

struct Resolution {
  std::vector<ScoreRecord> records;  // one per hole, canonical order
  std::size_t cache_hits = 0;
  std::size_t computed = 0;
};

/// Raised when a bridge-backed labeler lacks scores; carries the tasks the
/// external scorer has to answer.
class MissingBridgeScores : public Error {
 public:
  MissingBridgeScores(const std::string& what, std::vector<BridgeTask> tasks)
      : Error(what), tasks_(std::move(tasks)) {}
  const std::vector<BridgeTask>& tasks() const noexcept { return tasks_; }

 private:
  std::vector<BridgeTask> tasks_;
};

/// Labeler id with the CLI's pinning suffix.
class RenamedLabeler final : public Labeler {
 public:
  RenamedLabeler(std::string id, const Labeler& inner) : id_(std::move(id)), inner_(inner) {}
  const std::string& id() const override { return id_; }
  std::vector<std::optional<double>> score(const QueryContext& ctx,
                                           std::span<const DocId> unknown) const override {
    return inner_.score(ctx, unknown);
  }

 private:
  std::string id_;
  const Labeler& inner_;
};

inline Resolution resolve_scores(const JobConfig& c, const Inputs& in, const ShallowPool& pool,
                                 const HoleSet& holes) {
  const std::string id = c.labeler_id();
  Resolution res;
  HoleSet missing;
  missing.depth = holes.depth;
  std::vector<ScoreRecord> reused;
  for (const auto& [qid, docid] : holes.holes) {
    const auto* cached = in.cache ? in.cache->find(id, qid, docid) : nullptr;
    if (cached && cached->rel_docid == *pool.rel_doc(qid)) {
      reused.push_back(*cached);
    } else {
      missing.holes.emplace(qid, docid);
    }
  }
  res.cache_hits = reused.size();

  std::vector<ScoreRecord> fresh;
  if (!missing.holes.empty()) {
    std::unique_ptr<Labeler> owned;
    std::optional<LexicalIndex> index;
    switch (c.labeler.kind) {
      case LabelerSpec::Kind::kZero: owned = std::make_unique<ZeroLabeler>(); break;
      case LabelerSpec::Kind::kOracle: owned = std::make_unique<OracleLabeler>(*in.reference); break;
      case LabelerSpec::Kind::kMaxRepBm25:
        index.emplace(in.corpus->texts);
        owned = make_maxrep_bm25(*index, c.maxrep_k, c.bm25);
        break;
      case LabelerSpec::Kind::kMaxRepEmbed: owned = make_maxrep_embed(*in.embeddings, c.maxrep_k); break;
      case LabelerSpec::Kind::kBridge:
        owned = std::make_unique<CachedLabeler>(
            c.labeler.id(), in.bridge ? scores_from_bridge(*in.bridge) : std::map<QueryDoc, double>{});
        break;
    }
    std::set<QueryDoc> pinned;
    LabelOptions options;
    options.threads = c.threads;
    if (c.pin_examined_nonrelevant) {
      pinned = examined_nonrelevant(*in.baseline, pool);
      options.pinned_zero = &pinned;
    }
    if (in.corpus) options.queries = &in.corpus->queries;
    const RenamedLabeler labeler(id, *owned);
    try {
      fresh = label(labeler, pool, missing, options);
    } catch (const MissingScoresError& e) {
      std::vector<BridgeTask> tasks;
      if (in.corpus) {
        for (const auto& [qid, docid] : e.missing()) {
          const auto q = in.corpus->queries.find(qid);
          const auto a = in.corpus->texts.find(*pool.rel_doc(qid));
          const auto b = in.corpus->texts.find(docid);
          if (q == in.corpus->queries.end() || a == in.corpus->texts.end() ||
              b == in.corpus->texts.end()) {
            throw Error("cannot build bridge task for (" + qid + ", " + docid +
                        "): query or passage text missing");
          }
          tasks.push_back(BridgeTask{bridge_task_id(qid, docid), q->second, a->second, b->second});
        }
      }
      throw MissingBridgeScores(e.what(), std::move(tasks));
    }
  }
  res.computed = fresh.size();
  res.records = std::move(reused);
  res.records.insert(res.records.end(), fresh.begin(), fresh.end());
  std::sort(res.records.begin(), res.records.end(), canonical_less);
  return res;
}

// ---------------------------------------------------------------------------
// Commands

inline nlohmann::ordered_json report_header(const char* command, const JobConfig& c) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config"] = c.to_json();
  return j;
}

inline int cmd_simulate_pool(const JobConfig& c, std::ostream& out) {
  Needs needs;
  needs.pool = true;
  JobConfig sim = c;
  sim.pool.clear();
  const auto in = load_inputs(sim, needs);
  const auto state = pool_from(sim, in);
  const auto& s = *state.simulation;

  std::ostringstream qrels_text;
  write_pool_qrels(qrels_text, s.pool);
  std::ostringstream examined_text;
  write_pool_examined(examined_text, s.pool);
  const auto dir = fs::path(c.output_dir);
  write_file_atomically(dir / "pool.qrels", qrels_text.str());
  write_file_atomically(dir / "pool.examined.json", examined_text.str());

  auto summary = report_header("simulate-pool", c);
  summary["queries_kept"] = s.pool.entries.size();
  summary["queries_dropped_no_relevant"] = s.no_relevant_in_run;
  summary["queries_dropped_unjudged"] = s.unjudged_queries;
  summary["mean_examined"] = s.mean_examined();
  summary["pool_qrels"] = (dir / "pool.qrels").string();
  summary["pool_examined"] = (dir / "pool.examined.json").string();
  out << summary.dump(2) << '\n';
  return kExitOk;
}

inline int handle_missing_bridge(const JobConfig& c, const MissingBridgeScores& e,
                                 std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (!e.tasks().empty()) {
    std::ostringstream tasks;
    write_bridge_tasks(tasks, e.tasks());
    write_file_atomically(c.task_file, tasks.str());
    err << "wrote " << e.tasks().size() << " bridge task(s) to " << c.task_file << '\n';
  } else {
    err << "no corpus/queries configured; cannot write bridge tasks\n";
  }
  return kExitUsage;
}

inline int cmd_label(const JobConfig& c, std::ostream& out, std::ostream& err) {
  Needs needs;
  needs.pool = needs.runs = needs.scores = true;
  const auto in = load_inputs(c, needs);
  const auto state = pool_from(c, in);
  const auto holes = find_holes(in.runs, state.pool, c.depth);
  Resolution res;
  try {
    res = resolve_scores(c, in, state.pool, holes);
  } catch (const MissingBridgeScores& e) {
    return handle_missing_bridge(c, e, err);
  }

  ScoreCache merged = *in.cache;
  for (const auto& r : res.records) merged.upsert(r);
  std::ostringstream text;
  write_score_cache(text, merged);
  write_file_atomically(c.cache_file(), text.str());

  auto summary = report_header("label", c);
  summary["labeler"] = c.labeler_id();
  summary["holes"] = holes.size();
  summary["cache_hits"] = res.cache_hits;
  summary["computed"] = res.computed;
  summary["cache"] = c.cache_file().string();
  summary["cache_records"] = merged.size();
  out << summary.dump(2) << '\n';
  return kExitOk;
}

struct CandidateEvaluation {
  PoolState pool;
  GainTable table;
  std::vector<QueryId> queries;
};

inline CandidateEvaluation candidate_gains(const JobConfig& c, const Inputs& in,
                                           std::size_t depth) {
  CandidateEvaluation ev;
  ev.pool = pool_from(c, in);
  const auto holes = find_holes(in.runs, ev.pool.pool, depth);
  const auto res = resolve_scores(c, in, ev.pool.pool, holes);
  ev.table = build_gain_table(ev.pool.pool, res.records, c.labeler_id());
  ev.queries = ev.pool.pool.queries();
  return ev;
}

inline int cmd_evaluate(const JobConfig& c, std::ostream& out, std::ostream& err) {
  Needs needs;
  needs.pool = needs.runs = needs.scores = true;
  const auto in = load_inputs(c, needs);
  CandidateEvaluation ev;
  try {
    ev = candidate_gains(c, in, c.depth);
  } catch (const MissingBridgeScores& e) {
    return handle_missing_bridge(c, e, err);
  }
  const auto dir = fs::path(c.output_dir) / "eval";
  nlohmann::ordered_json summary = report_header("evaluate", c);
  summary["labeler"] = c.labeler_id();
  nlohmann::ordered_json results = nlohmann::ordered_json::array();
  for (const auto& run : in.runs) {
    for (const auto& m : c.measures) {
      const auto r = evaluate(run, ev.table, m, ev.queries);
      nlohmann::ordered_json j;
      j["schema_version"] = kSchemaVersion;
      j["system_id"] = run.system_id;
      j["measure"] = r.measure_id;
      j["labeler"] = c.labeler_id();
      j["queries"] = ev.queries.size();
      j["mean"] = r.mean;
      nlohmann::ordered_json pq = nlohmann::ordered_json::object();
      for (const auto& [qid, v] : r.per_query) pq[qid] = v;
      j["per_query"] = pq;
      const auto path = dir / (slug(run.system_id) + "." + slug(r.measure_id) + ".json");
      write_file_atomically(path, j.dump(2) + "\n");
      nlohmann::ordered_json row;
      row["system_id"] = run.system_id;
      row["measure"] = r.measure_id;
      row["mean"] = r.mean;
      row["file"] = path.string();
      results.push_back(row);
    }
  }
  summary["results"] = results;
  out << summary.dump(2) << '\n';
  return kExitOk;
}

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << *v;
  return s.str();
}

struct MeasureComparison {
  std::string measure;
  std::optional<double> tau;
  std::optional<double> rho;
  std::optional<double> rbo;
  TErrorRates rates;
  std::vector<std::string> candidate_ranking;
  std::vector<std::string> full_ranking;
  std::vector<std::string> notes;
};

/// Correlations and t-test disagreement between a candidate and a reference
/// evaluation of the same systems.
inline MeasureComparison compare_measure(const std::vector<Run>& runs, const GainTable& candidate,
                                         const GainTable& full, const MeasureSpec& m,
                                         std::span<const QueryId> queries, const JobConfig& c) {
  MeasureComparison mc;
  mc.measure = m.id();
  const auto cand = rank_systems(runs, candidate, m, queries);
  const auto ref = rank_systems(runs, full, m, queries);
  mc.candidate_ranking = cand.ranking();
  mc.full_ranking = ref.ranking();
  const auto cm = cand.mean_vector();
  const auto fm = ref.mean_vector();
  try {
    mc.tau = kendall_tau(cm, fm);
  } catch (const Error& e) {
    mc.notes.push_back(std::string("tau: ") + e.what());
  }
  try {
    mc.rho = spearman_rho(cm, fm);
  } catch (const Error& e) {
    mc.notes.push_back(std::string("rho: ") + e.what());
  }
  mc.rbo = rbo(mc.candidate_ranking, mc.full_ranking, c.rbo_p);
  mc.rates = t_error_rates(cand, ref, c.alpha, c.correction,
                           c.top_from_full ? TopFrom::kFull : TopFrom::kCandidate);
  return mc;
}

inline int cmd_compare(const JobConfig& c, std::ostream& out, std::ostream& err) {
  Needs needs;
  needs.pool = needs.runs = needs.scores = needs.reference = true;
  const auto in = load_inputs(c, needs);
  if (in.runs.size() < 2) throw Error("compare needs at least 2 runs");
  CandidateEvaluation ev;
  try {
    ev = candidate_gains(c, in, c.depth);
  } catch (const MissingBridgeScores& e) {
    return handle_missing_bridge(c, e, err);
  }
  const auto full = gain_table_from_qrels(*in.reference);

  auto report = report_header("compare", c);
  report["labeler"] = c.labeler_id();
  nlohmann::ordered_json decisions;
  decisions["kendall"] = "tau-b";
  decisions["rbo"] = "extrapolated";
  decisions["top_system_from"] = c.top_from_full ? "full" : "candidate";
  decisions["correction"] = std::string(correction_name(c.correction));
  decisions["alpha"] = c.alpha;
  decisions["t_test"] = "paired, two-sided";
  decisions["reference_gain"] = "grade / max_grade";
  decisions["undefined_rates"] = "null";
  report["decisions"] = decisions;
  report["systems"] = in.runs.size();
  report["queries"] = ev.queries.size();

  std::ostringstream table;
  table << std::left << std::setw(14) << "Measure" << std::setw(24) << "Holes" << std::right
        << std::setw(8) << "tau" << std::setw(8) << "rho" << std::setw(8) << "RBO"
        << std::setw(8) << "t-FNR" << std::setw(8) << "t-FPR" << '\n';
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& m : c.measures) {
    const auto mc = compare_measure(in.runs, ev.table, full, m, ev.queries, c);
    nlohmann::ordered_json row;
    row["measure"] = mc.measure;
    row["tau"] = optional_json(mc.tau);
    row["rho"] = optional_json(mc.rho);
    row["rbo"] = optional_json(mc.rbo);
    row["t_fnr"] = optional_json(mc.rates.fnr);
    row["t_fpr"] = optional_json(mc.rates.fpr);
    row["top_system"] = mc.rates.top_system;
    nlohmann::ordered_json confusion;
    confusion["tp"] = mc.rates.tp;
    confusion["fp"] = mc.rates.fp;
    confusion["fn"] = mc.rates.fn;
    confusion["tn"] = mc.rates.tn;
    row["confusion"] = confusion;
    row["candidate_ranking"] = mc.candidate_ranking;
    row["full_ranking"] = mc.full_ranking;
    row["notes"] = mc.notes;
    rows.push_back(row);
    table << std::left << std::setw(14) << mc.measure << std::setw(24) << c.labeler_id()
          << std::right << std::setw(8) << cell(mc.tau) << std::setw(8) << cell(mc.rho)
          << std::setw(8) << cell(mc.rbo) << std::setw(8) << cell(mc.rates.fnr) << std::setw(8)
          << cell(mc.rates.fpr) << '\n';
  }
  report["measures"] = rows;
  const auto dir = fs::path(c.output_dir);
  write_file_atomically(dir / "compare.json", report.dump(2) + "\n");
  write_file_atomically(dir / "compare.txt", table.str());
  out << table.str();
  return kExitOk;
}

inline int cmd_pr_curve(const JobConfig& c, std::ostream& out, std::ostream& err) {
  Needs needs;
  needs.pool = needs.runs = needs.scores = needs.reference = true;
  const auto in = load_inputs(c, needs);
  const auto state = pool_from(c, in);
  const auto holes = find_holes(in.runs, state.pool, c.pr_depth);
  Resolution res;
  try {
    res = resolve_scores(c, in, state.pool, holes);
  } catch (const MissingBridgeScores& e) {
    return handle_missing_bridge(c, e, err);
  }
  const auto pr = labeler_pr_analysis(res.records, *in.reference, c.rel_threshold);

  std::ostringstream csv;
  csv << "threshold,precision,recall\n";
  for (const auto& p : pr.curve.points) {
    csv << format_real(p.threshold) << ',' << format_real(p.precision) << ','
        << format_real(p.recall) << '\n';
  }
  auto summary = report_header("pr-curve", c);
  summary["labeler"] = c.labeler_id();
  summary["average_precision"] = pr.curve.average_precision;
  summary["best_f1"] = pr.curve.best_f1;
  summary["best_f1_threshold"] = pr.curve.best_f1_threshold;
  summary["judged"] = pr.judged;
  summary["relevant"] = pr.relevant;
  summary["unjudged_excluded"] = pr.unjudged;
  summary["points"] = pr.curve.points.size();
  const auto dir = fs::path(c.output_dir);
  write_file_atomically(dir / "pr_curve.csv", csv.str());
  write_file_atomically(dir / "pr_summary.json", summary.dump(2) + "\n");
  out << summary.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point

/// Runs the CLI; returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"One-shot labelers for filling holes in shallow relevance judgments"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file with flat keys");

  std::map<std::string, std::string> text_values;
  std::map<std::string, bool> flag_values;
  std::map<std::string, CLI::Option*> options;
  for (const auto& k : config_keys()) {
    if (k.type == KeyType::kBool) {
      flag_values[k.name] = false;
      options[k.name] = app.add_flag(flag_name(k.name), flag_values[k.name], k.help);
    } else {
      text_values[k.name] = "";
      options[k.name] = app.add_option(flag_name(k.name), text_values[k.name], k.help);
    }
  }
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"simulate-pool", "pick d+ per query from the baseline run"},
      {"label", "score holes with the configured labeler and update the cache"},
      {"evaluate", "evaluate every run under the filled judgments"},
      {"compare", "correlate filled and full-judgment evaluations"},
      {"pr-curve", "precision-recall of the labeler against full judgments"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::map<std::string, std::string> overrides;
  for (const auto& [key, opt] : options) {
    if (opt->count() == 0) continue;
    overrides[key] = flag_values.count(key) ? (flag_values[key] ? "true" : "false")
                                            : text_values[key];
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const JobConfig config = resolve_config(config_path, overrides);
    if (command == "simulate-pool") return cmd_simulate_pool(config, out);
    if (command == "label") return cmd_label(config, out, err);
    if (command == "evaluate") return cmd_evaluate(config, out, err);
    if (command == "compare") return cmd_compare(config, out, err);
    if (command == "pr-curve") return cmd_pr_curve(config, out, err);
    err << "usage error: unknown command " << command << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace oneshot::cli
