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
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "intentune/types.hpp"

namespace intentune::metrics {

// Exact-match rate. Multi-label rows must match as sets; an OOS row is correct
// when both sets are empty.
double accuracy(const Prediction& pred, const Prediction& truth);

struct F1Result {
  double macro = 0.0;
  std::vector<double> per_class;  // F1 per class id (0 for inactive classes)
  std::size_t active_classes = 0;
};

// Per-class binary F1 over "j in predicted set" vs "j in true set". The macro
// mean covers classes that occur at least once in either pred or truth; with
// no such class the macro value is 0.
F1Result macro_f1(const Prediction& pred, const Prediction& truth,
                  std::size_t n_classes);

// Binary F1 with "empty set" as the positive class. Needs an OOS truth row.
double oos_f1(const Prediction& pred, const Prediction& truth);

// Exact-match accuracy over rows whose truth is non-empty.
double in_domain_accuracy(const Prediction& pred, const Prediction& truth);

// Share of OOS truth rows predicted as the empty set.
double oos_accuracy(const Prediction& pred, const Prediction& truth);

// in_domain_accuracy + oos_accuracy, in [0, 2].
double jinoos_score(const Prediction& pred, const Prediction& truth);

// Macro-F1 over the in-domain truth rows only.
double in_domain_macro_f1(const Prediction& pred, const Prediction& truth,
                          std::size_t n_classes);

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  std::optional<double> oos_f1;
  std::optional<double> in_domain_accuracy;
  std::optional<double> jinoos;
  std::size_t n_samples = 0;
};

// Full report. OOS fields are filled only when truth has both OOS and
// in-domain rows.
EvalReport evaluate(const Prediction& pred, const Prediction& truth,
                    std::size_t n_classes);

nlohmann::ordered_json to_json(const EvalReport& report);

}  // namespace intentune::metrics
