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

#include "intentune/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>

#include "intentune/scorer_io.hpp"
#include "intentune/sha256.hpp"

namespace intentune {
namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("missing artifact file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

nlohmann::json parse_file(const fs::path& path, const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure("cannot parse " + path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json classes_json(const std::vector<ClassInfo>& classes) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& c : classes) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["name"] = c.name;
    if (c.description) j["description"] = *c.description;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<ClassInfo> classes_from_json(const nlohmann::json& j) {
  std::vector<ClassInfo> out;
  for (const auto& c : j) {
    ClassInfo info{c.at("id").get<int>(), c.at("name").get<std::string>(), std::nullopt};
    if (c.contains("description")) info.description = c.at("description").get<std::string>();
    out.push_back(std::move(info));
  }
  return out;
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["format_version"] = m.format_version;
  j["created_at"] = m.created_at;
  j["seed"] = m.seed;
  j["task_kind"] = to_string(m.task_kind);
  j["has_oos"] = m.has_oos;
  j["stage_metrics"] = m.stage_metrics;
  nlohmann::ordered_json d;
  d["embedding_s"] = m.durations.embedding;
  d["scoring_s"] = m.durations.scoring;
  d["decision_s"] = m.durations.decision;
  d["refit_s"] = m.durations.refit;
  d["total_s"] = m.durations.total;
  j["durations"] = std::move(d);
  return j;
}

Manifest manifest_from_json(const nlohmann::json& j) {
  try {
    Manifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kArtifactFormatVersion) {
      throw RuntimeFailure("unsupported version " + std::to_string(m.format_version) +
                           " (expected " + std::to_string(kArtifactFormatVersion) + ")");
    }
    m.created_at = j.value("created_at", std::string());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
    m.has_oos = j.at("has_oos").get<bool>();
    if (j.contains("stage_metrics")) {
      m.stage_metrics = nlohmann::ordered_json::parse(j.at("stage_metrics").dump());
    }
    const auto& d = j.at("durations");
    m.durations.embedding = d.at("embedding_s").get<double>();
    m.durations.scoring = d.at("scoring_s").get<double>();
    m.durations.decision = d.at("decision_s").get<double>();
    m.durations.refit = d.at("refit_s").get<double>();
    m.durations.total = d.at("total_s").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure(std::string("bad manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw RuntimeFailure(std::string("bad manifest: ") + e.what());
  }
}

void PipelineArtifact::validate() const {
  embedder.validate();
  if (scorer.dim() != embedder.dim) {
    throw InvalidArgument("scorer dimension " + std::to_string(scorer.dim()) +
                          " does not match embedder dimension " +
                          std::to_string(embedder.dim));
  }
  if (scorer.n_classes() != classes.size()) {
    throw InvalidArgument("scorer class count does not match the class list");
  }
  if (scorer.task_kind() != manifest.task_kind) {
    throw InvalidArgument("scorer task kind does not match the manifest");
  }
  decision::validate_rule(decision, manifest.task_kind, manifest.has_oos, classes.size());
}

void save_artifact(const PipelineArtifact& artifact, const fs::path& dir,
                   const std::string* study_log) {
  artifact.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create artifact directory " + dir.string() + ": " + ec.message());

  std::map<std::string, std::string> files;
  files["embedder.json"] = dump(to_json(artifact.embedder));
  files["scorer.bin"] = scoring::encode_scorer_state(artifact.scorer);
  files["scorer.json"] = dump(scoring::scorer_meta_json(artifact.scorer));
  files["decision.json"] = dump(decision::to_json(artifact.decision));
  files["classes.json"] = dump(classes_json(artifact.classes));
  if (study_log != nullptr) files["study.jsonl"] = *study_log;

  auto manifest = to_json(artifact.manifest);
  nlohmann::ordered_json checksums;
  for (const auto& [name, bytes] : files) checksums[name] = sha256_hex(bytes);
  manifest["checksums"] = std::move(checksums);

  for (const auto& [name, bytes] : files) write_file(dir / name, bytes);
  write_file(dir / "manifest.json", dump(manifest));
}

PipelineArtifact load_artifact(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const std::string manifest_text = read_file(manifest_path);
  const auto manifest_json = parse_file(manifest_path, manifest_text);
  Manifest manifest = manifest_from_json(manifest_json);
  // Keep the stage metrics in their written key order.
  manifest.stage_metrics = nlohmann::ordered_json::parse(manifest_text)
                               .value("stage_metrics", nlohmann::ordered_json::object());

  std::map<std::string, std::string> files;
  for (const char* name : kArtifactFiles) {
    if (std::string(name) == "manifest.json") continue;
    files[name] = read_file(dir / name);
  }
  if (!manifest_json.contains("checksums")) throw RuntimeFailure("manifest has no checksums");
  for (const auto& [name, expected] : manifest_json.at("checksums").items()) {
    auto it = files.find(name);
    const std::string bytes = it != files.end() ? it->second : read_file(dir / name);
    if (sha256_hex(bytes) != expected.get<std::string>()) {
      throw RuntimeFailure("checksum mismatch for " + (dir / name).string());
    }
  }
  for (const auto& [name, bytes] : files) {
    if (!manifest_json.at("checksums").contains(name)) {
      throw RuntimeFailure("manifest lists no checksum for " + name);
    }
  }

  try {
    PipelineArtifact artifact{
        std::move(manifest),
        embedder_ref_from_json(parse_file(dir / "embedder.json", files["embedder.json"])),
        scoring::decode_scorer(files["scorer.bin"],
                               parse_file(dir / "scorer.json", files["scorer.json"])),
        decision::decision_rule_from_json(
            parse_file(dir / "decision.json", files["decision.json"])),
        classes_from_json(parse_file(dir / "classes.json", files["classes.json"]))};
    artifact.validate();
    return artifact;
  } catch (const InvalidArgument& e) {
    throw RuntimeFailure("invalid artifact in " + dir.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure("invalid artifact in " + dir.string() + ": " + e.what());
  }
}

PredictResult predict(const PipelineArtifact& artifact, EmbeddingService& service,
                      std::span<const std::string> texts) {
  if (texts.empty()) throw InvalidArgument("no inputs to predict");
  const auto q = l2_normalize(service.embed(artifact.embedder, texts));
  PredictResult out;
  out.scores = scoring::score(artifact.scorer, q);
  out.labels = decision::apply_decision(artifact.decision, out.scores,
                                        artifact.manifest.task_kind);
  return out;
}

}  // namespace intentune
