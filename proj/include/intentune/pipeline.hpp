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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentune/dataset.hpp"
#include "intentune/decision.hpp"
#include "intentune/embedding_service.hpp"
#include "intentune/scoring.hpp"

namespace intentune {

inline constexpr int kArtifactFormatVersion = 1;

// Wall-clock seconds per optimizer stage.
struct StageDurations {
  double embedding = 0.0;
  double scoring = 0.0;
  double decision = 0.0;
  double refit = 0.0;
  double total = 0.0;

  bool operator==(const StageDurations&) const = default;
};

struct Manifest {
  int format_version = kArtifactFormatVersion;
  std::string created_at;  // UTC, ISO 8601
  std::uint64_t seed = 0;
  TaskKind task_kind = TaskKind::kSingleLabel;
  bool has_oos = false;
  // Stage results, chosen components, sampler constants, OOF report.
  nlohmann::ordered_json stage_metrics = nlohmann::ordered_json::object();
  StageDurations durations;
};

nlohmann::ordered_json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

struct PipelineArtifact {
  Manifest manifest;
  EmbedderRef embedder;
  scoring::FittedScorer scorer;
  decision::DecisionRule decision;
  std::vector<ClassInfo> classes;

  // Scorer shape matches the embedder and classes; the rule suits the task.
  void validate() const;
};

// Files written by save_artifact, besides the optional study.jsonl.
inline constexpr const char* kArtifactFiles[] = {
    "manifest.json", "embedder.json", "scorer.bin", "scorer.json", "decision.json",
    "classes.json"};

// Writes the artifact into `dir` (created if missing). The manifest records a
// SHA-256 checksum of every other file. Identical artifacts give identical
// bytes. `study_log`, when given, is stored as study.jsonl.
void save_artifact(const PipelineArtifact& artifact, const std::filesystem::path& dir,
                   const std::string* study_log = nullptr);

// Throws RuntimeFailure on a missing file (naming it), a checksum mismatch or
// an unsupported format version.
PipelineArtifact load_artifact(const std::filesystem::path& dir);

struct PredictResult {
  Prediction labels;
  ScoreMatrix scores;
};

// embed -> normalize -> score -> decide. Rows follow `texts`.
PredictResult predict(const PipelineArtifact& artifact, EmbeddingService& service,
                      std::span<const std::string> texts);

// The current UTC time formatted as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace intentune
