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

#include "intentune/scoring.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "intentune/logreg.hpp"

namespace intentune::scoring {
namespace {

using optimize::ParamSpec;
using optimize::ParamValue;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void softmax_in_place(std::span<double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : row) v /= sum;
}

// Rescales a non-negative row to sum to one; all-zero rows become uniform.
void to_simplex(std::span<double> row) {
  double sum = 0.0;
  for (double v : row) sum += v;
  if (sum <= 0.0) {
    std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    return;
  }
  for (double& v : row) v /= sum;
}

KnnState labeled_rows(const EmbeddingMatrix& x, std::span<const LabelSet> labels) {
  if (labels.size() != x.rows()) {
    throw InvalidArgument("got " + std::to_string(labels.size()) + " label sets for " +
                          std::to_string(x.rows()) + " embedding rows");
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].empty()) keep.push_back(i);
  }
  KnnState state;
  state.train = keep.size() == x.rows() ? x : x.select_rows(keep);
  for (std::size_t i : keep) state.labels.push_back(labels[i]);
  return state;
}

MlKnnState fit_mlknn(const ScorerSpec& spec, KnnState rows, std::size_t n_classes) {
  const std::size_t n = rows.train.rows();
  if (n < 2) throw InvalidArgument("ML-KNN needs at least 2 training rows");
  MlKnnState st;
  st.k = std::min<std::size_t>(static_cast<std::size_t>(spec.k), n - 1);
  const std::size_t width = st.k + 1;
  const double s = spec.smoothing;

  std::vector<double> pos_counts(n_classes * width, 0.0);
  std::vector<double> neg_counts(n_classes * width, 0.0);
  std::vector<double> class_sizes(n_classes, 0.0);
  const auto neighbors = cosine_topk_leave_one_out(rows.train, st.k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n_classes; ++j) {
      std::size_t c = 0;
      for (const auto& nb : neighbors[i]) {
        c += contains(rows.labels[nb.index], static_cast<int>(j)) ? 1 : 0;
      }
      if (contains(rows.labels[i], static_cast<int>(j))) {
        pos_counts[j * width + c] += 1.0;
        class_sizes[j] += 1.0;
      } else {
        neg_counts[j * width + c] += 1.0;
      }
    }
  }

  st.prior.resize(n_classes);
  st.cond_pos.resize(n_classes * width);
  st.cond_neg.resize(n_classes * width);
  for (std::size_t j = 0; j < n_classes; ++j) {
    st.prior[j] = (s + class_sizes[j]) / (2.0 * s + static_cast<double>(n));
    double pos_total = 0.0, neg_total = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      pos_total += pos_counts[j * width + c];
      neg_total += neg_counts[j * width + c];
    }
    for (std::size_t c = 0; c < width; ++c) {
      st.cond_pos[j * width + c] = (s + pos_counts[j * width + c]) /
                                   (s * static_cast<double>(width) + pos_total);
      st.cond_neg[j * width + c] = (s + neg_counts[j * width + c]) /
                                   (s * static_cast<double>(width) + neg_total);
    }
  }
  st.train = std::move(rows.train);
  st.labels = std::move(rows.labels);
  return st;
}

LogRegState fit_logreg(const ScorerSpec& spec, const KnnState& rows,
                       std::size_t n_classes, TaskKind task) {
  LogRegProblem problem;
  problem.rows = rows.train.rows();
  problem.dim = rows.train.dim();
  problem.n_classes = n_classes;
  problem.features.assign(rows.train.values().begin(), rows.train.values().end());
  problem.labels = rows.labels;
  problem.multilabel = task == TaskKind::kMultiLabel;
  problem.l2 = spec.l2;
  auto sol = solve_logreg(problem, spec.max_iter);
  LogRegState st;
  const auto split = sol.params.begin() + static_cast<std::ptrdiff_t>(n_classes * problem.dim);
  st.weights.assign(sol.params.begin(), split);
  st.bias.assign(split, sol.params.end());
  return st;
}

void check_query_dim(const FittedScorer& f, const EmbeddingMatrix& q) {
  if (q.dim() != f.dim()) {
    throw InvalidArgument("dimension mismatch: scorer expects d=" +
                          std::to_string(f.dim()) + ", queries have d=" +
                          std::to_string(q.dim()));
  }
}

}  // namespace

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kKnn: return "knn";
    case ScorerKind::kMlKnn: return "mlknn";
    case ScorerKind::kLogReg: return "logreg";
    case ScorerKind::kZeroShot: return "zeroshot";
  }
  return "unknown";
}

ScorerKind scorer_kind_from_string(std::string_view name) {
  if (name == "knn") return ScorerKind::kKnn;
  if (name == "mlknn") return ScorerKind::kMlKnn;
  if (name == "logreg") return ScorerKind::kLogReg;
  if (name == "zeroshot") return ScorerKind::kZeroShot;
  throw InvalidArgument("unknown scorer kind '" + std::string(name) + "'");
}

std::string_view to_string(KnnWeighting w) {
  return w == KnnWeighting::kUniform ? "uniform" : "distance";
}

KnnWeighting knn_weighting_from_string(std::string_view name) {
  if (name == "uniform") return KnnWeighting::kUniform;
  if (name == "distance") return KnnWeighting::kDistance;
  throw InvalidArgument("unknown knn weighting '" + std::string(name) + "'");
}

void ScorerSpec::validate() const {
  if (k < 1) throw InvalidArgument("scorer k must be >= 1");
  if (!(smoothing > 0.0)) throw InvalidArgument("ML-KNN smoothing must be > 0");
  if (!(l2 >= 0.0)) throw InvalidArgument("logreg l2 must be >= 0");
  if (max_iter < 1) throw InvalidArgument("logreg max_iter must be >= 1");
  if (!(temperature > 0.0)) throw InvalidArgument("zero-shot temperature must be > 0");
}

nlohmann::ordered_json to_json(const ScorerSpec& spec) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(spec.kind);
  switch (spec.kind) {
    case ScorerKind::kKnn:
      j["k"] = spec.k;
      j["weighting"] = to_string(spec.weighting);
      break;
    case ScorerKind::kMlKnn:
      j["k"] = spec.k;
      j["smoothing"] = spec.smoothing;
      break;
    case ScorerKind::kLogReg:
      j["l2"] = spec.l2;
      j["max_iter"] = spec.max_iter;
      break;
    case ScorerKind::kZeroShot:
      j["temperature"] = spec.temperature;
      break;
  }
  return j;
}

ScorerSpec scorer_spec_from_json(const nlohmann::json& j) {
  try {
    ScorerSpec spec;
    spec.kind = scorer_kind_from_string(j.at("kind").get<std::string>());
    spec.k = j.value("k", spec.k);
    spec.weighting = knn_weighting_from_string(
        j.value("weighting", std::string(to_string(spec.weighting))));
    spec.smoothing = j.value("smoothing", spec.smoothing);
    spec.l2 = j.value("l2", spec.l2);
    spec.max_iter = j.value("max_iter", spec.max_iter);
    spec.temperature = j.value("temperature", spec.temperature);
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad scorer spec: ") + e.what());
  }
}

ScorerSpec spec_from_params(ScorerKind kind, const optimize::Params& params) {
  ScorerSpec spec;
  spec.kind = kind;
  auto get = [&](const char* name) -> const ParamValue* {
    const auto it = params.find(name);
    return it == params.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("k")) spec.k = static_cast<int>(optimize::as_int(*v));
  if (const auto* v = get("weighting")) {
    spec.weighting = knn_weighting_from_string(optimize::as_string(*v));
  }
  if (const auto* v = get("smoothing")) spec.smoothing = optimize::as_double(*v);
  if (const auto* v = get("l2")) spec.l2 = optimize::as_double(*v);
  if (const auto* v = get("max_iter")) spec.max_iter = static_cast<int>(optimize::as_int(*v));
  if (const auto* v = get("temperature")) spec.temperature = optimize::as_double(*v);
  spec.validate();
  return spec;
}

FittedScorer::FittedScorer(ScorerSpec spec, TaskKind task_kind, std::size_t n_classes,
                           std::size_t dim, ScorerState state)
    : spec_(spec),
      task_kind_(task_kind),
      n_classes_(n_classes),
      dim_(dim),
      state_(std::move(state)) {
  spec_.validate();
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, KnnState> || std::is_same_v<T, MlKnnState>) {
          if (st.train.dim() != dim_ || st.labels.size() != st.train.rows()) {
            throw InvalidArgument("inconsistent neighbor scorer state");
          }
          if constexpr (std::is_same_v<T, MlKnnState>) {
            const std::size_t width = st.k + 1;
            if (st.prior.size() != n_classes_ || st.cond_pos.size() != n_classes_ * width ||
                st.cond_neg.size() != n_classes_ * width) {
              throw InvalidArgument("inconsistent ML-KNN tables");
            }
          }
        } else if constexpr (std::is_same_v<T, LogRegState>) {
          if (st.weights.size() != n_classes_ * dim_ || st.bias.size() != n_classes_) {
            throw InvalidArgument("inconsistent logreg parameters");
          }
        } else {
          if (st.descriptions.rows() != n_classes_ || st.descriptions.dim() != dim_) {
            throw InvalidArgument("inconsistent zero-shot description matrix");
          }
        }
      },
      state_);
}

FittedScorer fit_scorer(const ScorerSpec& spec, const EmbeddingMatrix& x,
                        std::span<const LabelSet> labels, const ScorerContext& ctx) {
  spec.validate();
  if (ctx.n_classes < 1) throw InvalidArgument("scorer needs at least one class");
  if (spec.kind == ScorerKind::kZeroShot) {
    if (ctx.class_descriptions == nullptr) {
      throw InvalidArgument("zero-shot scorer needs a description for every class");
    }
    const auto& desc = *ctx.class_descriptions;
    if (desc.rows() != ctx.n_classes) {
      throw InvalidArgument("zero-shot scorer got " + std::to_string(desc.rows()) +
                            " descriptions for " + std::to_string(ctx.n_classes) +
                            " classes");
    }
    return FittedScorer(spec, ctx.task_kind, ctx.n_classes, desc.dim(),
                        ZeroShotState{l2_normalize(desc)});
  }

  if (!x.normalized()) throw InvalidArgument("scorer inputs must be L2-normalized");
  KnnState rows = labeled_rows(x, labels);
  if (rows.train.rows() == 0) throw InvalidArgument("empty training set");
  for (const auto& l : rows.labels) {
    for (int c : l) {
      if (c < 0 || static_cast<std::size_t>(c) >= ctx.n_classes) {
        throw InvalidArgument("training label " + std::to_string(c) + " out of range");
      }
    }
  }
  const std::size_t dim = x.dim();
  switch (spec.kind) {
    case ScorerKind::kKnn:
      return FittedScorer(spec, ctx.task_kind, ctx.n_classes, dim, std::move(rows));
    case ScorerKind::kMlKnn:
      return FittedScorer(spec, ctx.task_kind, ctx.n_classes, dim,
                          fit_mlknn(spec, std::move(rows), ctx.n_classes));
    case ScorerKind::kLogReg:
      return FittedScorer(spec, ctx.task_kind, ctx.n_classes, dim,
                          fit_logreg(spec, rows, ctx.n_classes, ctx.task_kind));
    case ScorerKind::kZeroShot:
      break;
  }
  throw InvalidArgument("unsupported scorer kind");
}

ScoreMatrix score(const FittedScorer& f, const EmbeddingMatrix& queries,
                  std::size_t workers) {
  check_query_dim(f, queries);
  const std::size_t C = f.n_classes();
  const bool single = f.task_kind() == TaskKind::kSingleLabel;
  ScoreMatrix out(queries.rows(), C);

  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, KnnState>) {
          const std::size_t k =
              std::min<std::size_t>(static_cast<std::size_t>(f.spec().k), st.train.rows());
          const auto nbs = cosine_topk(queries, st.train, k, workers);
          for (std::size_t q = 0; q < queries.rows(); ++q) {
            auto row = out.row(q);
            double total = 0.0;
            for (const auto& nb : nbs[q]) {
              const double w = f.spec().weighting == KnnWeighting::kUniform
                                   ? 1.0
                                   : std::max(nb.similarity, 0.0);
              total += w;
              for (int c : st.labels[nb.index]) row[c] += w;
            }
            if (total > 0.0) {
              for (double& v : row) v /= total;
            }
            if (single) to_simplex(row);
          }
        } else if constexpr (std::is_same_v<T, MlKnnState>) {
          const std::size_t width = st.k + 1;
          const auto nbs = cosine_topk(queries, st.train, st.k, workers);
          for (std::size_t q = 0; q < queries.rows(); ++q) {
            auto row = out.row(q);
            for (std::size_t j = 0; j < C; ++j) {
              std::size_t c = 0;
              for (const auto& nb : nbs[q]) {
                c += contains(st.labels[nb.index], static_cast<int>(j)) ? 1 : 0;
              }
              const double on = st.cond_pos[j * width + c] * st.prior[j];
              const double off = st.cond_neg[j * width + c] * (1.0 - st.prior[j]);
              row[j] = on / (on + off);
            }
            if (single) to_simplex(row);
          }
        } else if constexpr (std::is_same_v<T, LogRegState>) {
          const std::size_t d = f.dim();
          for (std::size_t q = 0; q < queries.rows(); ++q) {
            auto x = queries.row(q);
            auto row = out.row(q);
            for (std::size_t j = 0; j < C; ++j) {
              double z = st.bias[j];
              for (std::size_t t = 0; t < d; ++t) z += st.weights[j * d + t] * x[t];
              row[j] = z;
            }
            if (single) {
              softmax_in_place(row);
            } else {
              for (double& v : row) v = sigmoid(v);
            }
          }
        } else {
          for (std::size_t q = 0; q < queries.rows(); ++q) {
            auto row = out.row(q);
            for (std::size_t j = 0; j < C; ++j) {
              row[j] = dot(queries.row(q), st.descriptions.row(j)) / f.spec().temperature;
            }
            if (single) {
              softmax_in_place(row);
            } else {
              for (double& v : row) v = sigmoid(v);
            }
          }
        }
      },
      f.state());
  return out;
}

std::vector<ScorerSpec> default_specs(TaskKind task_kind, bool has_descriptions) {
  std::vector<ScorerSpec> specs;
  specs.push_back({.kind = ScorerKind::kKnn});
  if (task_kind == TaskKind::kMultiLabel) specs.push_back({.kind = ScorerKind::kMlKnn});
  specs.push_back({.kind = ScorerKind::kLogReg});
  if (has_descriptions) specs.push_back({.kind = ScorerKind::kZeroShot});
  return specs;
}

optimize::ParamSpace default_param_space(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kKnn:
      return {ParamSpec::Int("k", 1, 32, true),
              ParamSpec::Categorical("weighting", {std::string("uniform"),
                                                   std::string("distance")})};
    case ScorerKind::kMlKnn:
      return {ParamSpec::Int("k", 3, 32),
              ParamSpec::Categorical("smoothing", {0.5, 1.0, 2.0})};
    case ScorerKind::kLogReg:
      return {ParamSpec::Float("l2", 1e-4, 10.0, true),
              ParamSpec::Categorical("max_iter", {std::int64_t{100}, std::int64_t{200},
                                                  std::int64_t{500}})};
    case ScorerKind::kZeroShot:
      return {ParamSpec::Float("temperature", 0.01, 1.0, true)};
  }
  return {};
}

}  // namespace intentune::scoring
