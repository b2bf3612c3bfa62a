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
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intentune/params.hpp"
#include "intentune/types.hpp"

namespace intentune::optimize {

enum class SamplerKind { kRandom, kTpe };

std::string_view to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(std::string_view name);

// Univariate TPE constants.
struct TpeOptions {
  double gamma = 0.25;
  std::size_t n_startup = 10;
  std::size_t n_candidates = 24;
  // Lower bound on the KDE bandwidth, as a fraction of the (transformed) range.
  double bandwidth_floor = 1e-3;
};

enum class TrialState { kComplete, kFailed };

struct Trial {
  std::size_t id = 0;
  Params params;
  double value = 0.0;  // higher is better; -inf for failed trials
  double duration_s = 0.0;
  TrialState state = TrialState::kComplete;
  std::string error;
};

struct StudyState {
  std::vector<Trial> trials;
  std::optional<std::size_t> best;  // earliest maximal complete trial

  void append(Trial trial);
  const Trial& best_trial() const;
  std::size_t completed() const;
};

Params sample_random(const ParamSpace& space, std::mt19937_64& rng);

// Falls back to sample_random (same rng stream) while fewer than
// `options.n_startup` trials are complete. Otherwise every active parameter
// is drawn independently: trials holding the parameter are ranked by value,
// the top max(1, floor(gamma * n)) form the "good" set, and of
// `n_candidates` draws from the good density l the one maximizing l/g wins.
// Numeric densities are truncated Gaussian KDEs (Scott bandwidth, floored)
// in log space for log parameters; categorical densities are add-one
// smoothed frequencies.
Params sample_tpe(const ParamSpace& space, std::span<const Trial> trials,
                  std::mt19937_64& rng, const TpeOptions& options = {});

using Objective = std::function<double(const Params&)>;

struct StudyOptions {
  std::size_t budget = 1;
  SamplerKind sampler = SamplerKind::kTpe;
  std::uint64_t seed = 0;
  TpeOptions tpe{};
  // Evaluated first, in order, before any sampled configuration.
  std::vector<Params> enqueued{};
};

// Raised when no trial of a study completes.
class StudyError : public RuntimeFailure {
 public:
  StudyError(const std::string& what, std::vector<std::string> failures)
      : RuntimeFailure(what), failures_(std::move(failures)) {}
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

// Runs `options.budget` trials sequentially. An objective that throws or
// returns a non-finite value marks its trial failed (value -inf) and the study
// continues. Deterministic for a fixed seed and deterministic objective.
StudyState run_study(const Objective& objective, const ParamSpace& space,
                     const StudyOptions& options);

// One JSON object per line: id, params, value, duration_s, state. A non-empty
// `stage` is written first on every line.
std::string to_jsonl(const StudyState& study, std::string_view stage = {});
void write_study_log(const StudyState& study, const std::filesystem::path& path);

}  // namespace intentune::optimize
