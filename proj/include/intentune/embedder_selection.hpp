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
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "intentune/dataset.hpp"
#include "intentune/embedding_service.hpp"

namespace intentune::selection {

enum class RankMetric { kNdcg, kProbeAccuracy };

std::string_view to_string(RankMetric metric);
RankMetric rank_metric_from_string(std::string_view name);

struct RankingEntry {
  EmbedderRef ref;
  double score = 0.0;
};

// Sorted by score, descending; equal scores keep candidate order.
struct EmbedderRanking {
  RankMetric metric = RankMetric::kNdcg;
  std::vector<RankingEntry> entries;
};

// Mean NDCG@k over queries with binary relevances. Each list is one query's
// relevance flags in retrieved order; IDCG uses the ideal reordering of the
// whole list. A query without relevant items scores 0.
double ndcg_at_k(std::span<const std::vector<int>> relevances, std::size_t k);

// Leave-one-out retrieval over the in-domain rows of `ds`: every row queries
// all others, a neighbor is relevant when it shares a label with the query,
// and the score is NDCG@k of the full neighbor ranking.
EmbedderRanking retrieval_rank_embedders(EmbeddingService& service,
                                         std::span<const EmbedderRef> candidates,
                                         const Dataset& ds, std::size_t k = 10);

// Fits the default logistic-regression scorer on `train` and measures
// in-domain accuracy on `val` (macro-F1 at threshold 0.5 for multi-label).
EmbedderRanking probe_rank_embedders(EmbeddingService& service,
                                     std::span<const EmbedderRef> candidates,
                                     const Dataset& train, const Dataset& val);

enum class StrategyKind { kPipelineLevel, kScoringLevel, kFixed };

std::string_view to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(std::string_view name);

struct SelectionStrategy {
  StrategyKind kind = StrategyKind::kPipelineLevel;
  RankMetric metric = RankMetric::kNdcg;  // pipeline level
  std::size_t k = 10;                     // retrieval depth
  std::optional<EmbedderRef> fixed;       // fixed
};

// Returned for scoring-level selection: the optimizer searches the embedder
// as a categorical parameter of every scorer trial.
struct DeferToScoring {};

using Selection = std::variant<EmbedderRef, DeferToScoring>;

// Pipeline level ranks the candidates (probe ranking uses a seeded 80/20
// stratified split of `ds`) and returns the top one.
Selection select_embedder(EmbeddingService& service, const SelectionStrategy& strategy,
                          std::span<const EmbedderRef> candidates, const Dataset& ds,
                          std::uint64_t seed, EmbedderRanking* ranking = nullptr);

// Spearman rank correlation between two rankings of the same model ids, with
// average ranks for tied scores. When a side has no rank variance the value is
// 1 if both sides are constant and 0 otherwise.
double spearman(const EmbedderRanking& a, const EmbedderRanking& b);

nlohmann::ordered_json to_json(const EmbedderRanking& ranking);

}  // namespace intentune::selection
