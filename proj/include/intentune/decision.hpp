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
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "intentune/study.hpp"
#include "intentune/types.hpp"

namespace intentune::decision {

struct ArgmaxRule {
  bool operator==(const ArgmaxRule&) const = default;
};

// One shared threshold (size 1) or one per class.
struct ThresholdRule {
  std::vector<double> thresholds;
  bool operator==(const ThresholdRule&) const = default;
};

// Per-row threshold ratio * max_j S_ij.
struct AdaptiveRule {
  double ratio = 1.0;
  bool operator==(const AdaptiveRule&) const = default;
};

// Single threshold chosen to maximize in-domain + OOS accuracy.
struct JinoosRule {
  double threshold = 0.5;
  bool operator==(const JinoosRule&) const = default;
};

// Per-class thresholds found by a sampler search.
struct TunedRule {
  std::vector<double> thresholds;
  bool operator==(const TunedRule&) const = default;
};

using DecisionRule =
    std::variant<ArgmaxRule, ThresholdRule, AdaptiveRule, JinoosRule, TunedRule>;

std::string_view rule_name(const DecisionRule& rule);

// Thresholds in [0, 1], ratio in (0, 1], vector sizes 1 or C (C for tuned),
// argmax only for single-label tasks without OOS.
void validate_rule(const DecisionRule& rule, TaskKind task_kind, bool has_oos,
                   std::size_t n_classes);

// Single-label: the argmax class (lowest id on ties) if it clears its
// threshold, else the empty set. Multi-label: every class clearing its
// threshold. Adaptive rows use ratio * row max as the threshold.
Prediction apply_decision(const DecisionRule& rule, const ScoreMatrix& scores,
                          TaskKind task_kind);

// Candidate thresholds for fit_jinoos: unique row maxima, midpoints between
// neighbours, and a midpoint above the largest maximum (reject-all) when that
// maximum is below one. Ascending.
std::vector<double> jinoos_candidates(const ScoreMatrix& scores);

JinoosRule fit_jinoos(const ScoreMatrix& scores, const Prediction& truth,
                      TaskKind task_kind);

// Grid r = 0.05, 0.10, ..., 1.00 by validation macro-F1; ties go to larger r.
AdaptiveRule fit_adaptive(const ScoreMatrix& scores, const Prediction& truth,
                          TaskKind task_kind);

struct TunableOptions {
  std::size_t budget = 64;
  optimize::SamplerKind sampler = optimize::SamplerKind::kTpe;
  std::uint64_t seed = 0;
};

// Objective used by the tunable rule: macro-F1, or for single-label truth with
// OOS rows the mean of in-domain macro-F1 and OOS-F1.
double tunable_objective(const Prediction& pred, const Prediction& truth,
                         TaskKind task_kind, std::size_t n_classes);

// Per-class threshold search in [0, 1]^C. Trial 0 is always all-0.5.
TunedRule fit_tunable(const ScoreMatrix& scores, const Prediction& truth,
                      TaskKind task_kind, const TunableOptions& options);

enum class RuleKind { kArgmax, kThreshold, kAdaptive, kJinoos, kTunable };

std::string_view to_string(RuleKind kind);
RuleKind rule_kind_from_string(std::string_view name);

// A decision strategy before fitting.
struct RuleTemplate {
  RuleKind kind = RuleKind::kArgmax;
  double threshold = 0.5;    // kThreshold
  std::size_t budget = 64;   // kTunable

  bool operator==(const RuleTemplate&) const = default;
};

// single-label, no OOS: argmax, tunable
// single-label, OOS:    threshold(0.5), jinoos, tunable
// multi-label:          threshold(0.5), adaptive, tunable
std::vector<RuleTemplate> default_rules(TaskKind task_kind, bool has_oos);

// Instantiates a template on validation scores.
DecisionRule fit_rule(const RuleTemplate& tmpl, const ScoreMatrix& scores,
                      const Prediction& truth, TaskKind task_kind,
                      optimize::SamplerKind sampler, std::uint64_t seed);

nlohmann::ordered_json to_json(const DecisionRule& rule);
DecisionRule decision_rule_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RuleTemplate& tmpl);
RuleTemplate rule_template_from_json(const nlohmann::json& j);

}  // namespace intentune::decision
