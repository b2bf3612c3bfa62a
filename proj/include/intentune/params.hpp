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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace intentune::optimize {

using ParamValue = std::variant<std::int64_t, double, std::string>;
using Params = std::map<std::string, ParamValue>;

enum class ParamKind { kFloat, kInt, kCategorical };

// A parameter is sampled only when `parent` currently holds `equals`.
struct ParamCondition {
  std::string parent;
  ParamValue equals;

  bool operator==(const ParamCondition&) const = default;
};

// One dimension of a search space. Conditional parameters must come after
// their parent in the space vector.
struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::kFloat;
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;
  std::vector<ParamValue> choices;
  std::optional<ParamCondition> condition;

  static ParamSpec Float(std::string name, double lo, double hi, bool log = false);
  static ParamSpec Int(std::string name, std::int64_t lo, std::int64_t hi,
                       bool log = false);
  static ParamSpec Categorical(std::string name, std::vector<ParamValue> choices);

  ParamSpec& when(std::string parent, ParamValue equals);

  // lo < hi; log requires lo > 0; at least one choice.
  void validate() const;

  bool operator==(const ParamSpec&) const = default;
};

using ParamSpace = std::vector<ParamSpec>;

void validate_space(const ParamSpace& space);
bool is_active(const ParamSpec& spec, const Params& params);

double as_double(const ParamValue& v);
std::int64_t as_int(const ParamValue& v);
const std::string& as_string(const ParamValue& v);

nlohmann::ordered_json to_json(const ParamValue& v);
ParamValue param_value_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Params& params);
nlohmann::ordered_json to_json(const ParamSpec& spec);
ParamSpec param_spec_from_json(const nlohmann::json& j);

// Canonical text form, usable as a memoization key.
std::string canonical(const Params& params);

}  // namespace intentune::optimize
