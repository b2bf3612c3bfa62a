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
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "intentune/embeddings.hpp"
#include "intentune/params.hpp"
#include "intentune/types.hpp"

namespace intentune::scoring {

// Closed set of scorers. New kinds need a state type, fit/score branches and
// a serialization tag in scorer_io.
enum class ScorerKind { kKnn, kMlKnn, kLogReg, kZeroShot };
enum class KnnWeighting { kUniform, kDistance };

std::string_view to_string(ScorerKind kind);
ScorerKind scorer_kind_from_string(std::string_view name);
std::string_view to_string(KnnWeighting w);
KnnWeighting knn_weighting_from_string(std::string_view name);

struct ScorerSpec {
  ScorerKind kind = ScorerKind::kKnn;
  int k = 5;                                   // knn, mlknn
  KnnWeighting weighting = KnnWeighting::kUniform;  // knn
  double smoothing = 1.0;                      // mlknn
  double l2 = 1e-2;                            // logreg
  int max_iter = 200;                          // logreg
  double temperature = 0.1;                    // zeroshot

  // k >= 1, smoothing > 0, l2 >= 0, max_iter >= 1, temperature > 0.
  void validate() const;
  bool operator==(const ScorerSpec&) const = default;
};

// Hyperparameters relevant to the spec's kind only.
nlohmann::ordered_json to_json(const ScorerSpec& spec);
ScorerSpec scorer_spec_from_json(const nlohmann::json& j);

// Builds a spec of `kind` from sampled parameters (names without prefix:
// "k", "weighting", "smoothing", "l2", "max_iter", "temperature"). Missing
// names keep their defaults.
ScorerSpec spec_from_params(ScorerKind kind, const optimize::Params& params);

struct ScorerContext {
  std::size_t n_classes = 0;
  TaskKind task_kind = TaskKind::kSingleLabel;
  // C x d normalized embeddings of the class descriptions (zero-shot only).
  const EmbeddingMatrix* class_descriptions = nullptr;
};

struct KnnState {
  EmbeddingMatrix train;
  std::vector<LabelSet> labels;
};

struct MlKnnState {
  EmbeddingMatrix train;
  std::vector<LabelSet> labels;
  std::size_t k = 0;              // effective neighbor count, min(k, N - 1)
  std::vector<double> prior;      // P(H_j), per class
  std::vector<double> cond_pos;   // P(c | H_j), C x (k + 1)
  std::vector<double> cond_neg;   // P(c | not H_j), C x (k + 1)
};

struct LogRegState {
  std::vector<double> weights;  // C x d, row-major
  std::vector<double> bias;     // C
};

struct ZeroShotState {
  EmbeddingMatrix descriptions;  // C x d, normalized
};

using ScorerState = std::variant<KnnState, MlKnnState, LogRegState, ZeroShotState>;

// A fitted scorer. Immutable; share freely across threads.
class FittedScorer {
 public:
  FittedScorer(ScorerSpec spec, TaskKind task_kind, std::size_t n_classes,
               std::size_t dim, ScorerState state);

  const ScorerSpec& spec() const { return spec_; }
  TaskKind task_kind() const { return task_kind_; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t dim() const { return dim_; }
  const ScorerState& state() const { return state_; }

 private:
  ScorerSpec spec_;
  TaskKind task_kind_;
  std::size_t n_classes_;
  std::size_t dim_;
  ScorerState state_;
};

// Fits on the rows of `x` with non-empty label sets; OOS rows are skipped.
// Zero-shot ignores the rows entirely and needs ctx.class_descriptions.
FittedScorer fit_scorer(const ScorerSpec& spec, const EmbeddingMatrix& x,
                        std::span<const LabelSet> labels, const ScorerContext& ctx);

// Per-class scores for normalized queries. Single-label rows sum to one.
ScoreMatrix score(const FittedScorer& scorer, const EmbeddingMatrix& queries,
                  std::size_t workers = 1);

// Default scorer line-up: knn and logreg; mlknn for multi-label tasks;
// zero-shot when every class has a description.
std::vector<ScorerSpec> default_specs(TaskKind task_kind, bool has_descriptions);

// Default search range per scorer kind (unprefixed parameter names).
optimize::ParamSpace default_param_space(ScorerKind kind);

}  // namespace intentune::scoring
