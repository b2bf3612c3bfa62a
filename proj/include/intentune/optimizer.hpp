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
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "intentune/dataset.hpp"
#include "intentune/embedder_selection.hpp"
#include "intentune/embedding_service.hpp"
#include "intentune/metrics.hpp"
#include "intentune/pipeline.hpp"
#include "intentune/scoring.hpp"
#include "intentune/search_space.hpp"
#include "intentune/study.hpp"

namespace intentune::optimize {

// Sees every scorer fit made for out-of-fold scoring: the dataset rows the
// scorer was fit on and the rows it then scored.
using FitObserver = std::function<void(std::span<const std::size_t> fit_rows,
                                       std::span<const std::size_t> scored_rows)>;

// For each fold f: fit on the in-domain rows outside f, score every row in f
// (OOS rows included). Each row is scored exactly once.
ScoreMatrix oof_scores(const scoring::ScorerSpec& spec, const FoldAssignment& folds,
                       const EmbeddingMatrix& x, std::span<const LabelSet> labels,
                       const scoring::ScorerContext& ctx,
                       const FitObserver& observer = {}, std::size_t workers = 1);

struct OptimizeOptions {
  std::size_t workers = 1;
  FitObserver observer;
};

struct OptimizeResult {
  PipelineArtifact artifact;
  StudyState scoring_study;
  StudyState decision_study;
  std::optional<selection::EmbedderRanking> ranking;
  ScoreMatrix oof;                 // final out-of-fold scores of the chosen scorer
  metrics::EvalReport oof_report;  // chosen rule applied to `oof`

  // Both studies as JSON Lines, tagged with their stage.
  std::string study_log() const;
};

// Folds actually used: space.n_folds capped by the smallest class size.
int effective_folds(const Dataset& ds, int n_folds);

// Stage 1 picks the embedder, stage 2 searches scorer configurations on
// out-of-fold scores, stage 3 searches decision rules on the chosen scorer's
// out-of-fold scores, then the scorer is refit on all in-domain rows.
OptimizeResult optimize_pipeline(EmbeddingService& service, const Dataset& ds,
                                 const SearchSpace& space,
                                 const OptimizeOptions& options = {});

}  // namespace intentune::optimize
