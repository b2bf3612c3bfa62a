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

#include "intentune/embedder_selection.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "intentune/decision.hpp"
#include "intentune/metrics.hpp"
#include "intentune/scoring.hpp"

namespace intentune::selection {
namespace {

std::vector<std::size_t> in_domain_rows(const Dataset& ds) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.samples[i].is_oos()) rows.push_back(i);
  }
  return rows;
}

bool share_label(const LabelSet& a, const LabelSet& b) {
  for (int l : a) {
    if (contains(b, l)) return true;
  }
  return false;
}

// Runs `fn` and tags any failure with the candidate's model id.
template <typename Fn>
auto with_candidate(const EmbedderRef& ref, Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("embedder '" + ref.model_id + "': " + e.what());
  } catch (const Error& e) {
    throw RuntimeFailure("embedder '" + ref.model_id + "': " + e.what());
  }
}

EmbeddingMatrix embed_normalized(EmbeddingService& service, const EmbedderRef& ref,
                                 const Dataset& ds) {
  const auto texts = ds.texts();
  return l2_normalize(service.embed(ref, texts));
}

void sort_ranking(EmbedderRanking& r) {
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [](const RankingEntry& a, const RankingEntry& b) {
                     return a.score > b.score;
                   });
}

std::vector<double> average_ranks(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::string_view to_string(RankMetric metric) {
  return metric == RankMetric::kNdcg ? "ndcg" : "probe_accuracy";
}

RankMetric rank_metric_from_string(std::string_view name) {
  if (name == "ndcg") return RankMetric::kNdcg;
  if (name == "probe_accuracy" || name == "probe") return RankMetric::kProbeAccuracy;
  throw InvalidArgument("unknown ranking metric '" + std::string(name) + "'");
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kPipelineLevel: return "pipeline_level";
    case StrategyKind::kScoringLevel: return "scoring_level";
    case StrategyKind::kFixed: return "fixed";
  }
  return "unknown";
}

StrategyKind strategy_kind_from_string(std::string_view name) {
  if (name == "pipeline_level") return StrategyKind::kPipelineLevel;
  if (name == "scoring_level") return StrategyKind::kScoringLevel;
  if (name == "fixed") return StrategyKind::kFixed;
  throw InvalidArgument("unknown embedding strategy '" + std::string(name) + "'");
}

double ndcg_at_k(std::span<const std::vector<int>> relevances, std::size_t k) {
  if (k < 1) throw InvalidArgument("ndcg cutoff k must be at least 1");
  if (relevances.empty()) throw InvalidArgument("ndcg needs at least one query");
  double total = 0.0;
  for (const auto& rel : relevances) {
    if (rel.empty()) throw InvalidArgument("ndcg query with an empty relevance list");
    const std::size_t depth = std::min(k, rel.size());
    const auto n_relevant = static_cast<std::size_t>(
        std::count_if(rel.begin(), rel.end(), [](int r) { return r != 0; }));
    double dcg = 0.0;
    double idcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
      const double discount = 1.0 / std::log2(static_cast<double>(i) + 2.0);
      if (rel[i] != 0) dcg += discount;
      if (i < n_relevant) idcg += discount;
    }
    if (idcg > 0.0) total += dcg / idcg;
  }
  return total / static_cast<double>(relevances.size());
}

EmbedderRanking retrieval_rank_embedders(EmbeddingService& service,
                                         std::span<const EmbedderRef> candidates,
                                         const Dataset& ds, std::size_t k) {
  if (candidates.empty()) throw InvalidArgument("no embedder candidates to rank");
  if (k < 1) throw InvalidArgument("retrieval depth k must be at least 1");
  const auto rows = in_domain_rows(ds);
  if (rows.size() < k + 1) {
    throw InvalidArgument("retrieval ranking needs at least k+1 = " +
                          std::to_string(k + 1) + " in-domain samples, got " +
                          std::to_string(rows.size()));
  }
  const Dataset in_domain = subset(ds, rows);

  EmbedderRanking ranking{RankMetric::kNdcg, {}};
  for (const auto& ref : candidates) {
    const double value = with_candidate(ref, [&] {
      const auto x = embed_normalized(service, ref, in_domain);
      const auto neighbors = cosine_topk_leave_one_out(x, x.rows() - 1);
      std::vector<std::vector<int>> rel(neighbors.size());
      for (std::size_t q = 0; q < neighbors.size(); ++q) {
        rel[q].reserve(neighbors[q].size());
        for (const auto& nb : neighbors[q]) {
          rel[q].push_back(share_label(in_domain.samples[q].labels,
                                       in_domain.samples[nb.index].labels)
                               ? 1
                               : 0);
        }
      }
      return ndcg_at_k(rel, k);
    });
    ranking.entries.push_back({ref, value});
  }
  sort_ranking(ranking);
  return ranking;
}

EmbedderRanking probe_rank_embedders(EmbeddingService& service,
                                     std::span<const EmbedderRef> candidates,
                                     const Dataset& train, const Dataset& val) {
  if (candidates.empty()) throw InvalidArgument("no embedder candidates to rank");
  const Dataset train_in = subset(train, in_domain_rows(train));
  const Dataset val_in = subset(val, in_domain_rows(val));
  if (train_in.size() == 0 || val_in.size() == 0) {
    throw InvalidArgument("probe ranking needs in-domain train and validation samples");
  }
  const TaskKind task = train.task_kind;
  const scoring::ScorerSpec probe{.kind = scoring::ScorerKind::kLogReg};
  const auto truth = val_in.labels();

  EmbedderRanking ranking{RankMetric::kProbeAccuracy, {}};
  for (const auto& ref : candidates) {
    const double value = with_candidate(ref, [&] {
      const auto x = embed_normalized(service, ref, train_in);
      const auto q = embed_normalized(service, ref, val_in);
      const auto labels = train_in.labels();
      const auto fitted = scoring::fit_scorer(
          probe, x, labels, {.n_classes = train.num_classes(), .task_kind = task});
      const auto scores = scoring::score(fitted, q);
      if (task == TaskKind::kSingleLabel) {
        return metrics::accuracy(
            decision::apply_decision(decision::ArgmaxRule{}, scores, task), truth);
      }
      return metrics::macro_f1(
                 decision::apply_decision(decision::ThresholdRule{{0.5}}, scores, task),
                 truth, train.num_classes())
          .macro;
    });
    ranking.entries.push_back({ref, value});
  }
  sort_ranking(ranking);
  return ranking;
}

Selection select_embedder(EmbeddingService& service, const SelectionStrategy& strategy,
                          std::span<const EmbedderRef> candidates, const Dataset& ds,
                          std::uint64_t seed, EmbedderRanking* ranking) {
  switch (strategy.kind) {
    case StrategyKind::kFixed: {
      if (!strategy.fixed) throw InvalidArgument("fixed embedding strategy without a model");
      strategy.fixed->validate();
      if (strategy.fixed->source == EmbedderSource::kStore &&
          !std::filesystem::exists(strategy.fixed->location)) {
        throw InvalidArgument("fixed embedder '" + strategy.fixed->model_id +
                              "' store not found: " + strategy.fixed->location);
      }
      return *strategy.fixed;
    }
    case StrategyKind::kScoringLevel:
      if (candidates.empty()) throw InvalidArgument("no embedder candidates");
      return DeferToScoring{};
    case StrategyKind::kPipelineLevel:
      break;
  }
  if (candidates.empty()) throw InvalidArgument("no embedder candidates");
  EmbedderRanking r;
  if (candidates.size() == 1) {
    r.metric = strategy.metric;
    r.entries.push_back({candidates.front(), 0.0});
  } else if (strategy.metric == RankMetric::kNdcg) {
    r = retrieval_rank_embedders(service, candidates, ds, strategy.k);
  } else {
    const auto [train, val] = stratified_split(ds, 0.8, seed);
    r = probe_rank_embedders(service, candidates, train, val);
  }
  if (ranking != nullptr) *ranking = r;
  return r.entries.front().ref;
}

double spearman(const EmbedderRanking& a, const EmbedderRanking& b) {
  if (a.entries.size() != b.entries.size() || a.entries.empty()) {
    throw InvalidArgument("spearman needs two rankings of the same candidates");
  }
  std::map<std::string, double> b_score;
  for (const auto& e : b.entries) b_score[e.ref.model_id] = e.score;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& e : a.entries) {
    const auto it = b_score.find(e.ref.model_id);
    if (it == b_score.end()) {
      throw InvalidArgument("model '" + e.ref.model_id + "' missing from a ranking");
    }
    xs.push_back(e.score);
    ys.push_back(it->second);
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return (sxx == 0.0 && syy == 0.0) ? 1.0 : 0.0;
  return sxy / std::sqrt(sxx * syy);
}

nlohmann::ordered_json to_json(const EmbedderRanking& ranking) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& e : ranking.entries) {
    nlohmann::ordered_json j;
    j["model_id"] = e.ref.model_id;
    j["metric_kind"] = to_string(ranking.metric);
    j["score"] = e.score;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace intentune::selection
