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

#include "intentune/decision.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "intentune/metrics.hpp"

namespace intentune::decision {
namespace {

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

double threshold_for(const std::vector<double>& t, std::size_t j) {
  return t.size() == 1 ? t.front() : t[j];
}

Prediction apply_thresholds(const std::vector<double>& t, const ScoreMatrix& s,
                            TaskKind task) {
  if (t.size() != 1 && t.size() != s.cols()) {
    throw InvalidArgument("rule has " + std::to_string(t.size()) +
                          " thresholds for " + std::to_string(s.cols()) + " classes");
  }
  Prediction out(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto row = s.row(i);
    if (task == TaskKind::kSingleLabel) {
      const std::size_t j = argmax(row);
      if (row[j] >= threshold_for(t, j)) out[i] = {static_cast<int>(j)};
    } else {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] >= threshold_for(t, j)) out[i].push_back(static_cast<int>(j));
      }
    }
  }
  return out;
}

void check_rows(const ScoreMatrix& s, const Prediction& truth) {
  if (s.rows() != truth.size()) {
    throw InvalidArgument("score rows (" + std::to_string(s.rows()) +
                          ") and truth rows (" + std::to_string(truth.size()) +
                          ") differ");
  }
}

void check_unit_interval(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InvalidArgument(std::string(what) + " must lie in [0, 1], got " +
                          std::to_string(v));
  }
}

}  // namespace

std::string_view rule_name(const DecisionRule& rule) {
  static constexpr std::string_view kNames[] = {"argmax", "threshold", "adaptive",
                                                "jinoos", "tuned"};
  return kNames[rule.index()];
}

void validate_rule(const DecisionRule& rule, TaskKind task_kind, bool has_oos,
                   std::size_t n_classes) {
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ArgmaxRule>) {
          if (task_kind != TaskKind::kSingleLabel || has_oos) {
            throw InvalidArgument(
                "argmax rule needs a single-label task without OOS samples");
          }
        } else if constexpr (std::is_same_v<T, ThresholdRule> ||
                             std::is_same_v<T, TunedRule>) {
          const bool tuned = std::is_same_v<T, TunedRule>;
          if (r.thresholds.empty() ||
              (r.thresholds.size() != 1 && r.thresholds.size() != n_classes) ||
              (tuned && r.thresholds.size() != n_classes)) {
            throw InvalidArgument("rule threshold count does not match the classes");
          }
          for (double t : r.thresholds) check_unit_interval(t, "threshold");
        } else if constexpr (std::is_same_v<T, AdaptiveRule>) {
          if (!(r.ratio > 0.0 && r.ratio <= 1.0)) {
            throw InvalidArgument("adaptive ratio must lie in (0, 1]");
          }
        } else {
          check_unit_interval(r.threshold, "threshold");
        }
      },
      rule);
}

Prediction apply_decision(const DecisionRule& rule, const ScoreMatrix& scores,
                          TaskKind task_kind) {
  return std::visit(
      [&](const auto& r) -> Prediction {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ArgmaxRule>) {
          if (task_kind != TaskKind::kSingleLabel) {
            throw InvalidArgument("rule/task mismatch: argmax on a multi-label task");
          }
          Prediction out(scores.rows());
          for (std::size_t i = 0; i < scores.rows(); ++i) {
            out[i] = {static_cast<int>(argmax(scores.row(i)))};
          }
          return out;
        } else if constexpr (std::is_same_v<T, ThresholdRule> ||
                             std::is_same_v<T, TunedRule>) {
          return apply_thresholds(r.thresholds, scores, task_kind);
        } else if constexpr (std::is_same_v<T, JinoosRule>) {
          return apply_thresholds({r.threshold}, scores, task_kind);
        } else {
          Prediction out(scores.rows());
          for (std::size_t i = 0; i < scores.rows(); ++i) {
            auto row = scores.row(i);
            const std::size_t top = argmax(row);
            if (task_kind == TaskKind::kSingleLabel) {
              out[i] = {static_cast<int>(top)};
              continue;
            }
            const double cut = r.ratio * row[top];
            for (std::size_t j = 0; j < row.size(); ++j) {
              if (row[j] >= cut) out[i].push_back(static_cast<int>(j));
            }
            if (out[i].empty()) out[i] = {static_cast<int>(top)};
          }
          return out;
        }
      },
      rule);
}

std::vector<double> jinoos_candidates(const ScoreMatrix& scores) {
  std::vector<double> maxima;
  maxima.reserve(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    maxima.push_back(*std::max_element(row.begin(), row.end()));
  }
  std::sort(maxima.begin(), maxima.end());
  maxima.erase(std::unique(maxima.begin(), maxima.end()), maxima.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    out.push_back(maxima[i]);
    if (i + 1 < maxima.size()) out.push_back(0.5 * (maxima[i] + maxima[i + 1]));
  }
  if (!maxima.empty() && maxima.back() < 1.0) {
    out.push_back(0.5 * (maxima.back() + 1.0));
  }
  return out;
}

JinoosRule fit_jinoos(const ScoreMatrix& scores, const Prediction& truth,
                      TaskKind task_kind) {
  check_rows(scores, truth);
  const bool has_oos =
      std::any_of(truth.begin(), truth.end(), [](const LabelSet& t) { return t.empty(); });
  const bool has_in =
      std::any_of(truth.begin(), truth.end(), [](const LabelSet& t) { return !t.empty(); });
  if (!has_oos) throw InvalidArgument("jinoos fitting needs OOS validation rows");
  if (!has_in) throw InvalidArgument("jinoos fitting needs in-domain validation rows");

  JinoosRule best;
  double best_score = -1.0;
  for (double t : jinoos_candidates(scores)) {
    const double s =
        metrics::jinoos_score(apply_decision(JinoosRule{t}, scores, task_kind), truth);
    if (s > best_score) {
      best_score = s;
      best.threshold = t;
    }
  }
  return best;
}

AdaptiveRule fit_adaptive(const ScoreMatrix& scores, const Prediction& truth,
                          TaskKind task_kind) {
  check_rows(scores, truth);
  if (task_kind != TaskKind::kMultiLabel) {
    throw InvalidArgument("adaptive decision is for multi-label tasks");
  }
  if (std::all_of(truth.begin(), truth.end(), [](const LabelSet& t) { return t.empty(); })) {
    throw InvalidArgument("adaptive fitting needs a row with a true label");
  }
  AdaptiveRule best;
  double best_f1 = -1.0;
  for (int step = 1; step <= 20; ++step) {
    const AdaptiveRule rule{static_cast<double>(step) / 20.0};
    const double f1 =
        metrics::macro_f1(apply_decision(rule, scores, task_kind), truth, scores.cols())
            .macro;
    if (f1 >= best_f1) {
      best_f1 = f1;
      best = rule;
    }
  }
  return best;
}

double tunable_objective(const Prediction& pred, const Prediction& truth,
                         TaskKind task_kind, std::size_t n_classes) {
  const bool has_oos =
      std::any_of(truth.begin(), truth.end(), [](const LabelSet& t) { return t.empty(); });
  const bool has_in =
      std::any_of(truth.begin(), truth.end(), [](const LabelSet& t) { return !t.empty(); });
  if (task_kind == TaskKind::kSingleLabel && has_oos && has_in) {
    return 0.5 * (metrics::in_domain_macro_f1(pred, truth, n_classes) +
                  metrics::oos_f1(pred, truth));
  }
  return metrics::macro_f1(pred, truth, n_classes).macro;
}

TunedRule fit_tunable(const ScoreMatrix& scores, const Prediction& truth,
                      TaskKind task_kind, const TunableOptions& options) {
  check_rows(scores, truth);
  if (truth.empty()) throw InvalidArgument("tunable fitting needs validation rows");
  if (options.budget < 1) throw InvalidArgument("tunable budget must be at least 1");
  const std::size_t C = scores.cols();

  optimize::ParamSpace space;
  optimize::Params baseline;
  for (std::size_t j = 0; j < C; ++j) {
    const std::string name = "t" + std::to_string(j);
    space.push_back(optimize::ParamSpec::Float(name, 0.0, 1.0));
    baseline[name] = 0.5;
  }
  auto thresholds_of = [&](const optimize::Params& p) {
    std::vector<double> t(C);
    for (std::size_t j = 0; j < C; ++j) {
      t[j] = optimize::as_double(p.at("t" + std::to_string(j)));
    }
    return t;
  };
  optimize::StudyOptions study_options;
  study_options.budget = options.budget;
  study_options.sampler = options.sampler;
  study_options.seed = options.seed;
  study_options.enqueued = {baseline};
  const auto study = optimize::run_study(
      [&](const optimize::Params& p) {
        const TunedRule rule{thresholds_of(p)};
        return tunable_objective(apply_decision(rule, scores, task_kind), truth,
                                 task_kind, C);
      },
      space, study_options);
  return TunedRule{thresholds_of(study.best_trial().params)};
}

std::string_view to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::kArgmax: return "argmax";
    case RuleKind::kThreshold: return "threshold";
    case RuleKind::kAdaptive: return "adaptive";
    case RuleKind::kJinoos: return "jinoos";
    case RuleKind::kTunable: return "tunable";
  }
  return "unknown";
}

RuleKind rule_kind_from_string(std::string_view name) {
  if (name == "argmax") return RuleKind::kArgmax;
  if (name == "threshold") return RuleKind::kThreshold;
  if (name == "adaptive") return RuleKind::kAdaptive;
  if (name == "jinoos") return RuleKind::kJinoos;
  if (name == "tunable") return RuleKind::kTunable;
  throw InvalidArgument("unknown decision rule '" + std::string(name) + "'");
}

std::vector<RuleTemplate> default_rules(TaskKind task_kind, bool has_oos) {
  if (task_kind == TaskKind::kMultiLabel) {
    return {{RuleKind::kThreshold}, {RuleKind::kAdaptive}, {RuleKind::kTunable}};
  }
  if (has_oos) {
    return {{RuleKind::kThreshold}, {RuleKind::kJinoos}, {RuleKind::kTunable}};
  }
  return {{RuleKind::kArgmax}, {RuleKind::kTunable}};
}

DecisionRule fit_rule(const RuleTemplate& tmpl, const ScoreMatrix& scores,
                      const Prediction& truth, TaskKind task_kind,
                      optimize::SamplerKind sampler, std::uint64_t seed) {
  switch (tmpl.kind) {
    case RuleKind::kArgmax:
      return ArgmaxRule{};
    case RuleKind::kThreshold:
      check_unit_interval(tmpl.threshold, "threshold");
      return ThresholdRule{{tmpl.threshold}};
    case RuleKind::kAdaptive:
      return fit_adaptive(scores, truth, task_kind);
    case RuleKind::kJinoos:
      return fit_jinoos(scores, truth, task_kind);
    case RuleKind::kTunable:
      return fit_tunable(scores, truth, task_kind,
                         {.budget = tmpl.budget, .sampler = sampler, .seed = seed});
  }
  throw InvalidArgument("unsupported decision template");
}

nlohmann::ordered_json to_json(const DecisionRule& rule) {
  nlohmann::ordered_json j;
  j["kind"] = rule_name(rule);
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ThresholdRule> || std::is_same_v<T, TunedRule>) {
          params["thresholds"] = r.thresholds;
        } else if constexpr (std::is_same_v<T, AdaptiveRule>) {
          params["ratio"] = r.ratio;
        } else if constexpr (std::is_same_v<T, JinoosRule>) {
          params["threshold"] = r.threshold;
        }
      },
      rule);
  j["params"] = std::move(params);
  return j;
}

DecisionRule decision_rule_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    const auto& p = j.at("params");
    if (kind == "argmax") return ArgmaxRule{};
    if (kind == "threshold") return ThresholdRule{p.at("thresholds").get<std::vector<double>>()};
    if (kind == "adaptive") return AdaptiveRule{p.at("ratio").get<double>()};
    if (kind == "jinoos") return JinoosRule{p.at("threshold").get<double>()};
    if (kind == "tuned") return TunedRule{p.at("thresholds").get<std::vector<double>>()};
    throw InvalidArgument("unknown decision rule kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad decision rule: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const RuleTemplate& tmpl) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(tmpl.kind);
  if (tmpl.kind == RuleKind::kThreshold) j["threshold"] = tmpl.threshold;
  if (tmpl.kind == RuleKind::kTunable) j["budget"] = tmpl.budget;
  return j;
}

RuleTemplate rule_template_from_json(const nlohmann::json& j) {
  try {
    RuleTemplate t;
    t.kind = rule_kind_from_string(j.at("kind").get<std::string>());
    t.threshold = j.value("threshold", t.threshold);
    t.budget = j.value("budget", t.budget);
    check_unit_interval(t.threshold, "threshold");
    if (t.budget < 1) throw InvalidArgument("tunable budget must be at least 1");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad decision template: ") + e.what());
  }
}

}  // namespace intentune::decision
