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

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "intentune/study.hpp"

namespace intentune::optimize {

void StudyState::append(Trial trial) {
  trial.id = trials.size();
  trials.push_back(std::move(trial));
  const Trial& t = trials.back();
  if (t.state != TrialState::kComplete) return;
  if (!best || t.value > trials[*best].value) best = t.id;
}

const Trial& StudyState::best_trial() const {
  if (!best) throw RuntimeFailure("study has no completed trial");
  return trials[*best];
}

std::size_t StudyState::completed() const {
  std::size_t n = 0;
  for (const auto& t : trials) n += t.state == TrialState::kComplete ? 1 : 0;
  return n;
}

StudyState run_study(const Objective& objective, const ParamSpace& space,
                     const StudyOptions& options) {
  if (options.budget < 1) throw InvalidArgument("study budget must be at least 1");
  validate_space(space);

  std::mt19937_64 rng(options.seed);
  StudyState study;
  for (std::size_t i = 0; i < options.budget; ++i) {
    Trial trial;
    if (i < options.enqueued.size()) {
      trial.params = options.enqueued[i];
    } else if (options.sampler == SamplerKind::kRandom) {
      trial.params = sample_random(space, rng);
    } else {
      trial.params = sample_tpe(space, study.trials, rng, options.tpe);
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      trial.value = objective(trial.params);
      if (!std::isfinite(trial.value)) {
        throw RuntimeFailure("objective returned a non-finite value");
      }
      trial.state = TrialState::kComplete;
    } catch (const std::exception& e) {
      trial.state = TrialState::kFailed;
      trial.value = -std::numeric_limits<double>::infinity();
      trial.error = e.what();
    }
    trial.duration_s = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    study.append(std::move(trial));
  }

  if (!study.best) {
    std::vector<std::string> failures;
    for (const auto& t : study.trials) failures.push_back(t.error);
    throw StudyError("all " + std::to_string(study.trials.size()) +
                         " trials failed; first failure: " + failures.front(),
                     failures);
  }
  return study;
}

std::string to_jsonl(const StudyState& study, std::string_view stage) {
  std::ostringstream out;
  for (const auto& t : study.trials) {
    nlohmann::ordered_json j;
    if (!stage.empty()) j["stage"] = stage;
    j["id"] = t.id;
    j["params"] = to_json(t.params);
    if (t.state == TrialState::kComplete) {
      j["value"] = t.value;
    } else {
      j["value"] = nullptr;  // -inf has no JSON spelling
    }
    j["duration_s"] = t.duration_s;
    j["state"] = t.state == TrialState::kComplete ? "complete" : "failed";
    if (!t.error.empty()) j["error"] = t.error;
    out << j.dump() << '\n';
  }
  return out.str();
}

void write_study_log(const StudyState& study, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write study log " + path.string());
  out << to_jsonl(study);
}

}  // namespace intentune::optimize
