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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "intentune/decision.hpp"
#include "intentune/embedder_selection.hpp"
#include "intentune/embedding_service.hpp"
#include "intentune/params.hpp"
#include "intentune/scoring.hpp"
#include "intentune/study.hpp"

namespace intentune::optimize {

struct EmbeddingSearch {
  selection::StrategyKind strategy = selection::StrategyKind::kPipelineLevel;
  selection::RankMetric metric = selection::RankMetric::kNdcg;
  std::size_t k = 10;
  std::optional<std::string> fixed;  // model id among the candidates
  std::vector<EmbedderRef> candidates;
};

// A scorer kind and the ranges of its hyperparameters (unprefixed names).
struct ScorerTemplate {
  scoring::ScorerKind kind = scoring::ScorerKind::kKnn;
  ParamSpace params;
};

// How stage 2 ranks scorer configurations on out-of-fold scores.
//   kArgmax:      argmax accuracy (single-label) or macro-F1 at 0.5 (multi-label)
//   kOosBalanced: fit a jinoos threshold on the OOF scores, then the mean of
//                 in-domain macro-F1 and OOS-F1; falls back to kArgmax when
//                 the data has no OOS rows or is multi-label
enum class Stage2Metric { kArgmax, kOosBalanced };

std::string_view to_string(Stage2Metric metric);
Stage2Metric stage2_metric_from_string(std::string_view name);

struct SearchSpace {
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::kTpe;
  std::size_t scoring_budget = 30;
  std::size_t decision_budget = 30;
  int n_folds = 3;
  std::optional<Stage2Metric> stage2_metric;  // unset: kArgmax
  EmbeddingSearch embedding;
  std::vector<ScorerTemplate> scoring;              // empty: defaults for the data
  std::vector<decision::RuleTemplate> decision;     // empty: defaults for the data

  // Budgets >= 1, n_folds >= 2, parameter ranges valid, fixed model resolvable.
  void validate() const;
};

// Parses the search-space JSON. Relative store paths of candidates resolve
// against `base_dir`. Candidates may still be empty here (a run config can
// supply them); call validate() before use.
SearchSpace parse_search_space(const nlohmann::json& j,
                               const std::filesystem::path& base_dir = {});
SearchSpace load_search_space(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const SearchSpace& space);

// Resolves relative store locations against `base_dir`.
EmbedderRef resolve_ref(EmbedderRef ref, const std::filesystem::path& base_dir);

}  // namespace intentune::optimize
