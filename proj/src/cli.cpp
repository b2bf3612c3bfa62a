// Copyright 2026 The Intentune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "intentune/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "intentune/dataset.hpp"
#include "intentune/embedder_selection.hpp"
#include "intentune/embedding_service.hpp"
#include "intentune/metrics.hpp"
#include "intentune/optimizer.hpp"
#include "intentune/pipeline.hpp"
#include "intentune/search_space.hpp"

namespace intentune {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kFitSchema = "intentune.fit.v1";
constexpr const char* kPredictSchema = "intentune.predict.v1";
constexpr const char* kEvaluateSchema = "intentune.evaluate.v1";
constexpr const char* kRankSchema = "intentune.rank_embedders.v1";
constexpr const char* kFewShotSchema = "intentune.fewshot.v1";

// Global flags plus per-command options, before the config file is merged.
struct Flags {
  std::string config;
  std::optional<long long> seed;
  std::string out;
  std::string format;
  std::string artifact;
  std::string input;
  std::string output;
  std::string dataset;
  std::vector<int> shots;
  std::optional<int> repeats;
};

struct RunConfig {
  fs::path base_dir;
  std::optional<fs::path> dataset;
  std::optional<fs::path> test_dataset;
  optimize::SearchSpace space;
  std::optional<fs::path> out;
  std::uint64_t seed = 0;
  std::string format;  // empty: command default
  std::optional<fs::path> artifact;
  std::optional<fs::path> input;
  std::optional<fs::path> output;
  std::vector<int> shots;
  int repeats = 3;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? (base / path).lexically_normal() : path;
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument("bad");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw InvalidArgument(what + " must be a non-negative integer, got '" + text + "'");
  }
}

RunConfig load_config(const Flags& flags) {
  RunConfig cfg;
  nlohmann::json j = nlohmann::json::object();
  if (!flags.config.empty()) {
    const fs::path path(flags.config);
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file " + path.string());
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("cannot parse config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    cfg.base_dir = path.parent_path();
  }
  try {
    auto path_of = [&](const char* key) -> std::optional<fs::path> {
      if (!j.contains(key)) return std::nullopt;
      return resolve(cfg.base_dir, j.at(key).get<std::string>());
    };
    cfg.dataset = path_of("dataset");
    cfg.test_dataset = path_of("test_dataset");
    cfg.out = path_of("out");
    cfg.artifact = path_of("artifact");
    cfg.input = path_of("input");
    cfg.output = path_of("output");

    if (j.contains("search_space")) {
      const auto& s = j.at("search_space");
      cfg.space = s.is_string()
                      ? optimize::load_search_space(resolve(cfg.base_dir, s.get<std::string>()))
                      : optimize::parse_search_space(s, cfg.base_dir);
    }
    if (j.contains("embedders")) {
      std::vector<EmbedderRef> refs;
      for (const auto& e : j.at("embedders")) {
        refs.push_back(optimize::resolve_ref(embedder_ref_from_json(e), cfg.base_dir));
      }
      cfg.space.embedding.candidates = std::move(refs);
    }
    cfg.seed = cfg.space.seed;
    if (j.contains("seed")) {
      const auto v = j.at("seed").get<long long>();
      if (v < 0) throw InvalidArgument("config seed must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(v);
    }
    cfg.format = j.value("format", std::string());
    cfg.shots = j.value("shots", std::vector<int>{});
    cfg.repeats = j.value("repeats", cfg.repeats);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad config: ") + e.what());
  }

  // Flags override the config; the environment seed sits between the two.
  if (const char* env = std::getenv("AUTOINTENT_SEED"); env != nullptr && *env != '\0') {
    cfg.seed = parse_seed(env, "AUTOINTENT_SEED");
  }
  if (flags.seed) {
    if (*flags.seed < 0) throw InvalidArgument("--seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(*flags.seed);
  }
  cfg.space.seed = cfg.seed;
  if (!flags.out.empty()) cfg.out = fs::path(flags.out);
  if (!flags.format.empty()) cfg.format = flags.format;
  if (!cfg.format.empty() && cfg.format != "json" && cfg.format != "csv") {
    throw InvalidArgument("--format must be json or csv, got '" + cfg.format + "'");
  }
  if (!flags.artifact.empty()) cfg.artifact = fs::path(flags.artifact);
  if (!flags.input.empty()) cfg.input = fs::path(flags.input);
  if (!flags.output.empty()) cfg.output = fs::path(flags.output);
  if (!flags.dataset.empty()) cfg.dataset = fs::path(flags.dataset);
  if (!flags.shots.empty()) cfg.shots = flags.shots;
  if (flags.repeats) cfg.repeats = *flags.repeats;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << text;
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

// Writes `text` to `path`, or to `out` when there is no path or it is "-".
void emit(const std::optional<fs::path>& path, const std::string& text, std::ostream& out) {
  if (path && *path != "-") {
    write_text(*path, text);
  } else {
    out << text;
  }
}

const fs::path& require(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw InvalidArgument(std::string("missing ") + what);
  return *p;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

void check_same_classes(const std::vector<ClassInfo>& expected, const Dataset& ds) {
  if (expected.size() != ds.classes.size()) {
    throw InvalidArgument("dataset has " + std::to_string(ds.classes.size()) +
                          " classes, artifact has " + std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].id != ds.classes[i].id || expected[i].name != ds.classes[i].name) {
      throw InvalidArgument("class " + std::to_string(i) + " is '" + ds.classes[i].name +
                            "' in the dataset but '" + expected[i].name +
                            "' in the artifact");
    }
  }
}

metrics::EvalReport evaluate_on(const PipelineArtifact& artifact, EmbeddingService& service,
                                const Dataset& ds) {
  check_same_classes(artifact.classes, ds);
  if (ds.task_kind != artifact.manifest.task_kind && ds.task_kind == TaskKind::kMultiLabel) {
    throw InvalidArgument("multi-label dataset for a single-label artifact");
  }
  const auto texts = ds.texts();
  const auto result = predict(artifact, service, texts);
  return metrics::evaluate(result.labels, ds.labels(), ds.num_classes());
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  const auto& out_dir = require(cfg.out, "output directory (--out or config 'out')");
  const Dataset ds = load_dataset(require(cfg.dataset, "dataset path in config"));
  std::optional<Dataset> test;
  if (cfg.test_dataset) test = load_dataset(*cfg.test_dataset);
  cfg.space.validate();

  EmbeddingService service;
  const auto start = std::chrono::steady_clock::now();
  auto result = optimize::optimize_pipeline(service, ds, cfg.space);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_artifact(result.artifact, out_dir / "artifact");
  const std::string log = result.study_log();
  write_text(out_dir / "study.jsonl", log);

  const auto& a = result.artifact;
  ordered_json report;
  report["schema"] = kFitSchema;
  report["seed"] = cfg.seed;
  report["task_kind"] = to_string(a.manifest.task_kind);
  report["has_oos"] = a.manifest.has_oos;
  report["artifact"] = (out_dir / "artifact").string();
  ordered_json chosen;
  chosen["embedder"] = a.embedder.model_id;
  chosen["scorer"] = scoring::to_json(a.scorer.spec());
  chosen["decision"] = decision::to_json(a.decision);
  report["chosen"] = std::move(chosen);
  report["stage_metrics"] = a.manifest.stage_metrics;
  report["durations"] = to_json(a.manifest)["durations"];
  report["wall_clock_s"] = wall;
  if (test) report["test"] = metrics::to_json(evaluate_on(a, service, *test));
  write_text(out_dir / "report.json", report.dump(2) + "\n");

  out << "fit: embedder=" << a.embedder.model_id
      << " scorer=" << scoring::to_string(a.scorer.spec().kind)
      << " decision=" << decision::rule_name(a.decision) << " artifact="
      << (out_dir / "artifact").string() << "\n";
  return kExitOk;
}

std::vector<std::string> read_inputs(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open input file " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<std::string> out;
  if (first != std::string::npos && text[first] == '[') {
    try {
      out = nlohmann::json::parse(text).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("cannot parse input " + path.string() + ": " + e.what());
    }
  } else {
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(line);
    }
  }
  if (out.empty()) throw InvalidArgument("no inputs in " + path.string());
  return out;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  const auto texts = read_inputs(require(cfg.input, "input file (--input)"));
  const auto artifact = load_artifact(require(cfg.artifact, "artifact directory (--artifact)"));
  EmbeddingService service;
  const auto result = predict(artifact, service, texts);

  auto records = ordered_json::array();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    ordered_json r;
    r["text"] = texts[i];
    r["labels"] = result.labels[i];
    auto names = ordered_json::array();
    for (int l : result.labels[i]) names.push_back(artifact.classes[l].name);
    r["label_names"] = std::move(names);
    auto row = result.scores.row(i);
    r["scores"] = std::vector<double>(row.begin(), row.end());
    records.push_back(std::move(r));
  }
  std::optional<fs::path> target = cfg.output;
  if (!target && cfg.out) target = *cfg.out / "predictions.json";
  emit(target, records.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const Dataset ds = load_dataset(require(cfg.dataset, "dataset (--dataset or config)"));
  const auto artifact = load_artifact(require(cfg.artifact, "artifact directory (--artifact)"));
  EmbeddingService service;
  const auto report = evaluate_on(artifact, service, ds);

  std::string text;
  if (cfg.format == "csv") {
    std::ostringstream s;
    s << "metric,value\n";
    s << "accuracy," << format_double(report.accuracy) << "\n";
    s << "macro_f1," << format_double(report.macro_f1) << "\n";
    if (report.in_domain_accuracy) {
      s << "in_domain_accuracy," << format_double(*report.in_domain_accuracy) << "\n";
    }
    if (report.oos_f1) s << "oos_f1," << format_double(*report.oos_f1) << "\n";
    if (report.jinoos) s << "jinoos," << format_double(*report.jinoos) << "\n";
    s << "n_samples," << report.n_samples << "\n";
    text = s.str();
  } else {
    ordered_json j;
    j["schema"] = kEvaluateSchema;
    const auto metrics_json = metrics::to_json(report);
    for (const auto& [k, v] : metrics_json.items()) j[k] = v;
    text = j.dump(2) + "\n";
  }
  std::optional<fs::path> target = cfg.output;
  if (!target && cfg.out) target = *cfg.out / (cfg.format == "csv" ? "evaluation.csv" : "evaluation.json");
  emit(target, text, out);
  return kExitOk;
}

int cmd_rank_embedders(const RunConfig& cfg, std::ostream& out) {
  const auto& candidates = cfg.space.embedding.candidates;
  if (candidates.size() < 2) {
    throw InvalidArgument("rank-embedders needs at least 2 candidates, got " +
                          std::to_string(candidates.size()));
  }
  for (const auto& c : candidates) c.validate();
  const Dataset ds = load_dataset(require(cfg.dataset, "dataset path in config"));
  EmbeddingService service;
  const auto ndcg = selection::retrieval_rank_embedders(service, candidates, ds,
                                                        cfg.space.embedding.k);
  const auto [train, val] = stratified_split(ds, 0.8, cfg.seed);
  const auto probe = selection::probe_rank_embedders(service, candidates, train, val);
  const double rho = selection::spearman(ndcg, probe);

  std::string text;
  if (cfg.format == "csv") {
    std::ostringstream s;
    s << "model_id,metric_kind,score\n";
    for (const auto* r : {&ndcg, &probe}) {
      for (const auto& e : r->entries) {
        s << e.ref.model_id << "," << selection::to_string(r->metric) << ","
          << format_double(e.score) << "\n";
      }
    }
    s << "," << "spearman," << format_double(rho) << "\n";
    text = s.str();
  } else {
    ordered_json j;
    j["schema"] = kRankSchema;
    j["k"] = cfg.space.embedding.k;
    auto entries = selection::to_json(ndcg);
    for (const auto& e : selection::to_json(probe)) entries.push_back(e);
    j["entries"] = std::move(entries);
    j["top1"] = {{"ndcg", ndcg.entries.front().ref.model_id},
                 {"probe_accuracy", probe.entries.front().ref.model_id}};
    j["spearman"] = rho;
    text = j.dump(2) + "\n";
  }
  std::optional<fs::path> target = cfg.output;
  if (!target && cfg.out) {
    target = *cfg.out / (cfg.format == "csv" ? "rank_embedders.csv" : "rank_embedders.json");
  }
  emit(target, text, out);
  return kExitOk;
}

int cmd_fewshot_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.shots.empty()) throw InvalidArgument("no shot counts given (--shots)");
  for (int n : cfg.shots) {
    if (n < 1) throw InvalidArgument("shot counts must be at least 1, got " + std::to_string(n));
  }
  if (cfg.repeats < 1) throw InvalidArgument("repeats must be at least 1");
  const auto& out_dir = require(cfg.out, "output directory (--out or config 'out')");
  const Dataset train = load_dataset(require(cfg.dataset, "dataset path in config"));
  const Dataset test = load_dataset(require(cfg.test_dataset, "test_dataset path in config"));
  check_same_classes(train.classes, test);
  cfg.space.validate();

  struct Cell {
    int n_shots = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double duration_s = 0.0;
    bool ok = false;
    std::string error;
  };
  std::vector<Cell> cells;
  EmbeddingService service;
  for (int n : cfg.shots) {
    for (int r = 0; r < cfg.repeats; ++r) {
      Cell cell;
      cell.n_shots = n;
      cell.seed = cfg.seed + static_cast<std::uint64_t>(r);
      const auto start = std::chrono::steady_clock::now();
      try {
        std::vector<std::string> warnings;
        const Dataset sub = few_shot_subsample(train, n, cell.seed, &warnings);
        for (const auto& w : warnings) err << "fewshot n=" << n << ": " << w << "\n";
        auto space = cfg.space;
        space.seed = cell.seed;
        const auto result = optimize::optimize_pipeline(service, sub, space);
        const auto report = evaluate_on(result.artifact, service, test);
        cell.accuracy = report.accuracy;
        cell.macro_f1 = report.macro_f1;
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
        err << "fewshot n=" << n << " seed=" << cell.seed << " failed: " << e.what() << "\n";
      }
      cell.duration_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      cells.push_back(std::move(cell));
    }
  }

  const bool as_json = cfg.format == "json";
  std::string text;
  if (as_json) {
    ordered_json j;
    j["schema"] = kFewShotSchema;
    auto rows = ordered_json::array();
    for (const auto& c : cells) {
      ordered_json r;
      r["n_shots"] = c.n_shots;
      r["seed"] = c.seed;
      r["accuracy"] = c.accuracy;
      r["macro_f1"] = c.macro_f1;
      r["duration_s"] = c.duration_s;
      r["state"] = c.ok ? "complete" : "failed";
      if (!c.ok) r["error"] = c.error;
      rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    text = j.dump(2) + "\n";
  } else {
    std::ostringstream s;
    s << "n_shots,seed,accuracy,macro_f1,duration_s,state\n";
    for (const auto& c : cells) {
      s << c.n_shots << "," << c.seed << "," << format_double(c.accuracy) << ","
        << format_double(c.macro_f1) << "," << std::fixed << std::setprecision(6) << c.duration_s
        << std::defaultfloat << ","
        << (c.ok ? "complete" : "failed") << "\n";
    }
    text = s.str();
  }
  const fs::path target =
      cfg.output ? *cfg.output : out_dir / (as_json ? "fewshot.json" : "fewshot.csv");
  write_text(target, text);
  out << "fewshot: " << cells.size() << " cells written to " << target.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embedding-based AutoML for intent classification", "intentune"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  long long seed_value = 0;
  app.add_option("--config", flags.config, "Run configuration (JSON)");
  auto* seed_opt = app.add_option("--seed", seed_value, "Random seed (overrides config)");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--format", flags.format, "Report format: json or csv");

  auto* fit = app.add_subcommand("fit", "Search and fit a pipeline");
  auto* pred = app.add_subcommand("predict", "Predict labels with a saved pipeline");
  pred->add_option("--artifact", flags.artifact, "Artifact directory");
  pred->add_option("--input", flags.input, "JSON array of strings or one text per line");
  pred->add_option("--output", flags.output, "Output JSON path");
  auto* eval = app.add_subcommand("evaluate", "Evaluate a saved pipeline on a dataset");
  eval->add_option("--artifact", flags.artifact, "Artifact directory");
  eval->add_option("--dataset", flags.dataset, "Labeled dataset (JSON)");
  eval->add_option("--output", flags.output, "Report path");
  auto* rank = app.add_subcommand("rank-embedders", "Rank candidate embedders");
  rank->add_option("--output", flags.output, "Report path");
  auto* fewshot = app.add_subcommand("fewshot-bench", "Accuracy versus shots per class");
  fewshot->add_option("--shots", flags.shots, "Shot counts, e.g. 4,16,64")->delimiter(',');
  int repeats = 0;
  auto* repeats_opt = fewshot->add_option("--repeats", repeats, "Seeds per shot count");
  fewshot->add_option("--output", flags.output, "Report path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (seed_opt->count() > 0) flags.seed = seed_value;
  if (repeats_opt->count() > 0) flags.repeats = repeats;

  try {
    const RunConfig cfg = load_config(flags);
    if (fit->parsed()) return cmd_fit(cfg, out);
    if (pred->parsed()) return cmd_predict(cfg, out);
    if (eval->parsed()) return cmd_evaluate(cfg, out);
    if (rank->parsed()) return cmd_rank_embedders(cfg, out);
    if (fewshot->parsed()) return cmd_fewshot_bench(cfg, out, err);
    err << "no command given\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace intentune
