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

#include "intentune/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>

#include <nlohmann/json.hpp>

namespace intentune::optimize {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

// Unique display names: the kind name, suffixed with #2, #3, ... on repeats.
template <typename T, typename NameOf>
std::vector<std::string> unique_names(const std::vector<T>& items, NameOf name_of) {
  std::map<std::string, int> seen;
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::string base(name_of(item));
    const int n = ++seen[base];
    out.push_back(n == 1 ? base : base + "#" + std::to_string(n));
  }
  return out;
}

// Value of `spec` used when a template is first tried: the scorer default
// where the range allows it.
ParamValue starting_value(const ParamSpec& spec, const scoring::ScorerSpec& defaults) {
  const std::string& n = spec.name;
  const double numeric = n == "k"           ? defaults.k
                         : n == "smoothing" ? defaults.smoothing
                         : n == "l2"        ? defaults.l2
                         : n == "max_iter"  ? defaults.max_iter
                         : n == "temperature" ? defaults.temperature
                                              : 0.5 * (spec.lo + spec.hi);
  switch (spec.kind) {
    case ParamKind::kFloat:
      return std::clamp(numeric, spec.lo, spec.hi);
    case ParamKind::kInt:
      return static_cast<std::int64_t>(std::clamp(std::round(numeric), spec.lo, spec.hi));
    case ParamKind::kCategorical:
      for (const auto& c : spec.choices) {
        if (n == "weighting" && std::holds_alternative<std::string>(c) &&
            std::get<std::string>(c) == scoring::to_string(defaults.weighting)) {
          return c;
        }
        if (!std::holds_alternative<std::string>(c) && as_double(c) == numeric) return c;
      }
      return spec.choices.front();
  }
  return spec.choices.front();
}

struct ScorerChoice {
  std::string name;
  ScorerTemplate tmpl;
};

std::vector<ScorerChoice> scorer_choices(const SearchSpace& space, const Dataset& ds) {
  std::vector<ScorerTemplate> templates = space.scoring;
  if (templates.empty()) {
    for (const auto& spec : scoring::default_specs(ds.task_kind, ds.all_classes_described())) {
      templates.push_back({spec.kind, scoring::default_param_space(spec.kind)});
    }
  }
  const auto names = unique_names(
      templates, [](const ScorerTemplate& t) { return scoring::to_string(t.kind); });
  std::vector<ScorerChoice> out;
  for (std::size_t i = 0; i < templates.size(); ++i) out.push_back({names[i], templates[i]});
  return out;
}

// Parameters of the chosen template with the "<name>." prefix removed.
Params unprefixed(const Params& params, const std::string& name) {
  Params out;
  const std::string prefix = name + ".";
  for (const auto& [key, value] : params) {
    if (key.rfind(prefix, 0) == 0) out[key.substr(prefix.size())] = value;
  }
  return out;
}

bool has_both_populations(const Prediction& truth) {
  bool oos = false, in = false;
  for (const auto& t : truth) (t.empty() ? oos : in) = true;
  return oos && in;
}

// The decision objective used by stage 3.
double final_metric(const Prediction& pred, const Prediction& truth, TaskKind task,
                    std::size_t n_classes) {
  if (task == TaskKind::kMultiLabel) return metrics::macro_f1(pred, truth, n_classes).macro;
  if (has_both_populations(truth)) {
    return 0.5 * (metrics::in_domain_macro_f1(pred, truth, n_classes) +
                  metrics::oos_f1(pred, truth));
  }
  return metrics::accuracy(pred, truth);
}

Prediction pick_rows(const Prediction& p, std::span<const std::size_t> rows) {
  Prediction out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(p[r]);
  return out;
}

// Stage-2 score of out-of-fold scores, averaged over folds.
double stage2_value(const ScoreMatrix& oof, const Prediction& truth, const FoldAssignment& folds,
                    TaskKind task, std::size_t n_classes, Stage2Metric metric) {
  Prediction pred;
  const bool balanced = metric == Stage2Metric::kOosBalanced &&
                        task == TaskKind::kSingleLabel && has_both_populations(truth);
  if (balanced) {
    const auto rule = decision::fit_jinoos(oof, truth, task);
    pred = decision::apply_decision(rule, oof, task);
  } else if (task == TaskKind::kSingleLabel) {
    pred = decision::apply_decision(decision::ArgmaxRule{}, oof, task);
  } else {
    pred = decision::apply_decision(decision::ThresholdRule{{0.5}}, oof, task);
  }

  double total = 0.0;
  int counted = 0;
  for (int f = 0; f < folds.k; ++f) {
    const auto rows = folds.rows_in(f);
    const auto p = pick_rows(pred, rows);
    const auto t = pick_rows(truth, rows);
    if (balanced) {
      if (!has_both_populations(t)) continue;
      total += 0.5 * (metrics::in_domain_macro_f1(p, t, n_classes) + metrics::oos_f1(p, t));
    } else if (task == TaskKind::kSingleLabel) {
      std::vector<std::size_t> in;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!t[i].empty()) in.push_back(i);
      }
      if (in.empty()) continue;
      total += metrics::accuracy(pick_rows(p, in), pick_rows(t, in));
    } else {
      total += metrics::macro_f1(p, t, n_classes).macro;
    }
    ++counted;
  }
  if (counted == 0) {
    if (balanced) {
      return 0.5 * (metrics::in_domain_macro_f1(pred, truth, n_classes) +
                    metrics::oos_f1(pred, truth));
    }
    throw RuntimeFailure("no fold holds rows to evaluate");
  }
  return total / counted;
}

// Embeddings of the dataset texts (and class descriptions) per embedder.
class EmbeddingCache {
 public:
  EmbeddingCache(EmbeddingService& service, const Dataset& ds) : service_(service), ds_(ds) {}

  const EmbeddingMatrix& rows(const EmbedderRef& ref) {
    auto& slot = rows_[ref.model_id];
    if (!slot) {
      const auto texts = ds_.texts();
      slot = std::make_unique<EmbeddingMatrix>(l2_normalize(service_.embed(ref, texts)));
    }
    return *slot;
  }

  // Null when some class lacks a description.
  const EmbeddingMatrix* descriptions(const EmbedderRef& ref) {
    if (!ds_.all_classes_described()) return nullptr;
    auto& slot = descriptions_[ref.model_id];
    if (!slot) {
      std::vector<std::string> texts;
      for (const auto& c : ds_.classes) texts.push_back(*c.description);
      slot = std::make_unique<EmbeddingMatrix>(l2_normalize(service_.embed(ref, texts)));
    }
    return slot.get();
  }

 private:
  EmbeddingService& service_;
  const Dataset& ds_;
  std::map<std::string, std::unique_ptr<EmbeddingMatrix>> rows_;
  std::map<std::string, std::unique_ptr<EmbeddingMatrix>> descriptions_;
};

const EmbedderRef& find_candidate(const SearchSpace& space, const std::string& model_id) {
  for (const auto& c : space.embedding.candidates) {
    if (c.model_id == model_id) return c;
  }
  throw InvalidArgument("unknown embedder '" + model_id + "'");
}

nlohmann::ordered_json sampler_json(const SearchSpace& space) {
  const TpeOptions tpe;
  nlohmann::ordered_json j;
  j["kind"] = to_string(space.sampler);
  j["gamma"] = tpe.gamma;
  j["n_startup"] = tpe.n_startup;
  j["n_candidates"] = tpe.n_candidates;
  j["bandwidth_floor"] = tpe.bandwidth_floor;
  j["bandwidth_clip"] = "range/min(100,n+1)";
  j["prior_kernel"] = true;
  j["parallel_trials"] = false;
  return j;
}

}  // namespace

ScoreMatrix oof_scores(const scoring::ScorerSpec& spec, const FoldAssignment& folds,
                       const EmbeddingMatrix& x, std::span<const LabelSet> labels,
                       const scoring::ScorerContext& ctx, const FitObserver& observer,
                       std::size_t workers) {
  if (folds.k < 2) throw InvalidArgument("out-of-fold scoring needs k >= 2");
  if (folds.fold_of.size() != x.rows() || labels.size() != x.rows()) {
    throw InvalidArgument("fold assignment, embeddings and labels differ in length");
  }
  ScoreMatrix out(x.rows(), ctx.n_classes);
  std::vector<int> times_scored(x.rows(), 0);
  for (int f = 0; f < folds.k; ++f) {
    const auto scored = folds.rows_in(f);
    if (scored.empty()) continue;
    std::vector<std::size_t> fit_rows;
    for (std::size_t r : folds.rows_not_in(f)) {
      if (!labels[r].empty()) fit_rows.push_back(r);
    }
    if (spec.kind != scoring::ScorerKind::kZeroShot) {
      std::vector<bool> seen(ctx.n_classes, false);
      std::vector<bool> wanted(ctx.n_classes, false);
      for (std::size_t r = 0; r < labels.size(); ++r) {
        for (int l : labels[r]) wanted[l] = true;
      }
      for (std::size_t r : fit_rows) {
        for (int l : labels[r]) seen[l] = true;
      }
      for (std::size_t j = 0; j < ctx.n_classes; ++j) {
        if (wanted[j] && !seen[j]) {
          throw InvalidArgument("fold " + std::to_string(f) + ": class " + std::to_string(j) +
                                " has no training rows");
        }
      }
    }
    if (observer) observer(fit_rows, scored);

    std::vector<LabelSet> fit_labels;
    fit_labels.reserve(fit_rows.size());
    for (std::size_t r : fit_rows) fit_labels.push_back(labels[r]);
    try {
      const auto fitted = scoring::fit_scorer(spec, x.select_rows(fit_rows), fit_labels, ctx);
      const auto s = scoring::score(fitted, x.select_rows(scored), workers);
      for (std::size_t i = 0; i < scored.size(); ++i) {
        std::copy(s.row(i).begin(), s.row(i).end(), out.row(scored[i]).begin());
        ++times_scored[scored[i]];
      }
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("fold " + std::to_string(f) + ": " + e.what());
    } catch (const Error& e) {
      throw RuntimeFailure("fold " + std::to_string(f) + ": " + e.what());
    }
  }
  for (std::size_t r = 0; r < times_scored.size(); ++r) {
    if (times_scored[r] != 1) {
      throw RuntimeFailure("row " + std::to_string(r) + " was scored " +
                           std::to_string(times_scored[r]) + " times");
    }
  }
  return out;
}

std::string OptimizeResult::study_log() const {
  return to_jsonl(scoring_study, "scoring") + to_jsonl(decision_study, "decision");
}

int effective_folds(const Dataset& ds, int n_folds) {
  const auto counts = class_counts(ds);
  const std::size_t smallest = counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());
  const int k = std::min<int>(n_folds, static_cast<int>(smallest));
  if (k < 2) {
    throw InvalidArgument("every class needs at least 2 samples for cross-validation");
  }
  return k;
}

OptimizeResult optimize_pipeline(EmbeddingService& service, const Dataset& ds,
                                 const SearchSpace& space, const OptimizeOptions& options) {
  space.validate();
  const auto t_start = Clock::now();
  const TaskKind task = ds.task_kind;
  const std::size_t C = ds.num_classes();
  const auto truth = ds.labels();
  const auto folds = stratified_kfold(ds, effective_folds(ds, space.n_folds), space.seed);
  const Stage2Metric s2_metric = space.stage2_metric.value_or(Stage2Metric::kArgmax);

  // Stage 1: embedder.
  selection::SelectionStrategy strategy{space.embedding.strategy, space.embedding.metric,
                                        space.embedding.k, std::nullopt};
  if (space.embedding.fixed) strategy.fixed = find_candidate(space, *space.embedding.fixed);
  selection::EmbedderRanking ranking;
  ranking.entries.clear();
  const auto selection = selection::select_embedder(
      service, strategy, space.embedding.candidates, ds, space.seed, &ranking);
  const bool deferred = std::holds_alternative<selection::DeferToScoring>(selection);
  EmbeddingCache cache(service, ds);
  std::vector<EmbedderRef> embedders;
  if (deferred) {
    embedders = space.embedding.candidates;
  } else {
    embedders.push_back(std::get<EmbedderRef>(selection));
  }
  for (const auto& ref : embedders) cache.rows(ref);
  const auto t_embedding = Clock::now();

  // Stage 2: scorer search.
  const auto choices = scorer_choices(space, ds);
  ParamSpace scorer_space;
  if (deferred) {
    std::vector<ParamValue> ids;
    for (const auto& ref : embedders) ids.emplace_back(ref.model_id);
    scorer_space.push_back(ParamSpec::Categorical("embedder", ids));
  }
  {
    std::vector<ParamValue> names;
    for (const auto& c : choices) names.emplace_back(c.name);
    scorer_space.push_back(ParamSpec::Categorical("scorer", names));
  }
  for (const auto& c : choices) {
    for (ParamSpec p : c.tmpl.params) {
      const std::string prefix = c.name + ".";
      p.name = prefix + p.name;
      if (p.condition) {
        p.condition->parent = prefix + p.condition->parent;
        // Nested conditions stay nested; the scorer condition is implied by the parent.
      } else {
        p.condition = ParamCondition{"scorer", ParamValue(c.name)};
      }
      scorer_space.push_back(std::move(p));
    }
  }

  auto embedder_of = [&](const Params& p) -> const EmbedderRef& {
    if (!deferred) return embedders.front();
    return find_candidate(space, as_string(p.at("embedder")));
  };
  auto spec_of = [&](const Params& p) {
    const std::string& name = as_string(p.at("scorer"));
    for (const auto& c : choices) {
      if (c.name == name) return scoring::spec_from_params(c.tmpl.kind, unprefixed(p, name));
    }
    throw InvalidArgument("unknown scorer choice '" + name + "'");
  };
  auto context_for = [&](const EmbedderRef& ref, const scoring::ScorerSpec& spec) {
    scoring::ScorerContext ctx{C, task, nullptr};
    if (spec.kind == scoring::ScorerKind::kZeroShot) ctx.class_descriptions = cache.descriptions(ref);
    return ctx;
  };
  auto oof_for = [&](const Params& p) {
    const auto& ref = embedder_of(p);
    const auto spec = spec_of(p);
    return oof_scores(spec, folds, cache.rows(ref), truth, context_for(ref, spec),
                      options.observer, options.workers);
  };

  StudyOptions scoring_options;
  scoring_options.budget = space.scoring_budget;
  scoring_options.sampler = space.sampler;
  scoring_options.seed = space.seed;
  for (const auto& ref : embedders) {
    for (const auto& c : choices) {
      Params p;
      if (deferred) p["embedder"] = ref.model_id;
      p["scorer"] = c.name;
      const scoring::ScorerSpec defaults{.kind = c.tmpl.kind};
      Params local;
      for (const auto& spec : c.tmpl.params) {
        if (!spec.condition || is_active(spec, local)) {
          local[spec.name] = starting_value(spec, defaults);
        }
      }
      for (const auto& [k, v] : local) p[c.name + "." + k] = v;
      scoring_options.enqueued.push_back(std::move(p));
    }
  }
  const auto scoring_study = run_study(
      [&](const Params& p) {
        return stage2_value(oof_for(p), truth, folds, task, C, s2_metric);
      },
      scorer_space, scoring_options);
  const auto& best_scorer = scoring_study.best_trial();
  const auto t_scoring = Clock::now();

  // Stage 3: decision search on the chosen scorer's out-of-fold scores.
  const ScoreMatrix oof = oof_for(best_scorer.params);
  const auto rule_templates =
      space.decision.empty() ? decision::default_rules(task, ds.has_oos) : space.decision;
  const auto rule_names = unique_names(
      rule_templates, [](const decision::RuleTemplate& t) { return decision::to_string(t.kind); });
  ParamSpace rule_space;
  {
    std::vector<ParamValue> names(rule_names.begin(), rule_names.end());
    rule_space.push_back(ParamSpec::Categorical("rule", names));
  }
  StudyOptions decision_options;
  decision_options.budget = space.decision_budget;
  decision_options.sampler = space.sampler;
  decision_options.seed = space.seed + 1;
  for (const auto& name : rule_names) decision_options.enqueued.push_back({{"rule", name}});

  struct Fitted {
    decision::DecisionRule rule;
    double value;
  };
  std::map<std::string, Fitted> fitted_rules;
  const auto decision_study = run_study(
      [&](const Params& p) {
        const std::string& name = as_string(p.at("rule"));
        if (auto it = fitted_rules.find(name); it != fitted_rules.end()) return it->second.value;
        const auto pos = static_cast<std::size_t>(
            std::find(rule_names.begin(), rule_names.end(), name) - rule_names.begin());
        auto rule = decision::fit_rule(rule_templates.at(pos), oof, truth, task, space.sampler,
                                       space.seed + 2 + pos);
        decision::validate_rule(rule, task, ds.has_oos, C);
        const double value =
            final_metric(decision::apply_decision(rule, oof, task), truth, task, C);
        fitted_rules.emplace(name, Fitted{std::move(rule), value});
        return value;
      },
      rule_space, decision_options);
  const auto& best_rule_trial = decision_study.best_trial();
  const auto& best_rule = fitted_rules.at(as_string(best_rule_trial.params.at("rule"))).rule;
  const auto t_decision = Clock::now();

  // Final refit on every in-domain row.
  const auto& final_ref = embedder_of(best_scorer.params);
  const auto final_spec = spec_of(best_scorer.params);
  auto scorer = scoring::fit_scorer(final_spec, cache.rows(final_ref), truth,
                                    context_for(final_ref, final_spec));
  const auto oof_pred = decision::apply_decision(best_rule, oof, task);
  auto oof_report = metrics::evaluate(oof_pred, truth, C);
  const auto t_end = Clock::now();

  Manifest manifest;
  manifest.created_at = utc_timestamp();
  manifest.seed = space.seed;
  manifest.task_kind = task;
  manifest.has_oos = ds.has_oos;
  manifest.durations.embedding = seconds_between(t_start, t_embedding);
  manifest.durations.scoring = seconds_between(t_embedding, t_scoring);
  manifest.durations.decision = seconds_between(t_scoring, t_decision);
  manifest.durations.refit = seconds_between(t_decision, t_end);
  manifest.durations.total = seconds_between(t_start, t_end);

  auto& sm = manifest.stage_metrics;
  sm["n_folds"] = folds.k;
  sm["sampler"] = sampler_json(space);
  nlohmann::ordered_json emb;
  emb["strategy"] = selection::to_string(space.embedding.strategy);
  emb["selected"] = final_ref.model_id;
  if (!ranking.entries.empty()) emb["ranking"] = selection::to_json(ranking);
  sm["embedding"] = std::move(emb);
  nlohmann::ordered_json sc;
  sc["metric"] = to_string(s2_metric);
  sc["best_value"] = best_scorer.value;
  sc["best_trial"] = best_scorer.id;
  sc["trials"] = scoring_study.trials.size();
  sc["failed"] = scoring_study.trials.size() - scoring_study.completed();
  sc["spec"] = scoring::to_json(final_spec);
  sm["scoring"] = std::move(sc);
  nlohmann::ordered_json dc;
  dc["best_value"] = best_rule_trial.value;
  dc["best_trial"] = best_rule_trial.id;
  dc["trials"] = decision_study.trials.size();
  dc["rule"] = decision::to_json(best_rule);
  nlohmann::ordered_json candidates = nlohmann::ordered_json::object();
  for (const auto& name : rule_names) {
    if (auto it = fitted_rules.find(name); it != fitted_rules.end()) {
      candidates[name] = it->second.value;
    }
  }
  dc["candidates"] = std::move(candidates);
  sm["decision"] = std::move(dc);
  sm["oof_report"] = metrics::to_json(oof_report);

  PipelineArtifact artifact{std::move(manifest), final_ref, std::move(scorer), best_rule,
                            ds.classes};
  artifact.validate();
  std::optional<selection::EmbedderRanking> ranking_out;
  if (!ranking.entries.empty()) ranking_out = ranking;
  return OptimizeResult{std::move(artifact), scoring_study, decision_study,
                        std::move(ranking_out), oof, std::move(oof_report)};
}

}  // namespace intentune::optimize
