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

#include "intentune/params.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "intentune/types.hpp"

namespace intentune::optimize {

ParamSpec ParamSpec::Float(std::string name, double lo, double hi, bool log) {
  ParamSpec s;
  s.name = std::move(name);
  s.kind = ParamKind::kFloat;
  s.lo = lo;
  s.hi = hi;
  s.log = log;
  return s;
}

ParamSpec ParamSpec::Int(std::string name, std::int64_t lo, std::int64_t hi,
                         bool log) {
  ParamSpec s = Float(std::move(name), static_cast<double>(lo),
                      static_cast<double>(hi), log);
  s.kind = ParamKind::kInt;
  return s;
}

ParamSpec ParamSpec::Categorical(std::string name, std::vector<ParamValue> choices) {
  ParamSpec s;
  s.name = std::move(name);
  s.kind = ParamKind::kCategorical;
  s.choices = std::move(choices);
  return s;
}

ParamSpec& ParamSpec::when(std::string parent, ParamValue equals) {
  condition = ParamCondition{std::move(parent), std::move(equals)};
  return *this;
}

void ParamSpec::validate() const {
  if (name.empty()) throw InvalidArgument("parameter with an empty name");
  if (kind == ParamKind::kCategorical) {
    if (choices.empty()) {
      throw InvalidArgument("categorical parameter '" + name + "' has no choices");
    }
    return;
  }
  if (!(lo < hi)) {
    // A degenerate numeric range is only allowed for integers pinned to one value.
    if (!(kind == ParamKind::kInt && lo == hi)) {
      throw InvalidArgument("parameter '" + name + "' needs lo < hi");
    }
  }
  if (log && !(lo > 0.0)) {
    throw InvalidArgument("log-scaled parameter '" + name + "' needs lo > 0");
  }
}

void validate_space(const ParamSpace& space) {
  std::set<std::string> seen;
  for (const auto& spec : space) {
    spec.validate();
    if (spec.condition && !seen.count(spec.condition->parent)) {
      throw InvalidArgument("parameter '" + spec.name + "' depends on '" +
                            spec.condition->parent + "', which must come first");
    }
    if (!seen.insert(spec.name).second) {
      throw InvalidArgument("duplicate parameter '" + spec.name + "'");
    }
  }
}

bool is_active(const ParamSpec& spec, const Params& params) {
  if (!spec.condition) return true;
  const auto it = params.find(spec.condition->parent);
  return it != params.end() && it->second == spec.condition->equals;
}

double as_double(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw InvalidArgument("expected a numeric parameter, got '" +
                        std::get<std::string>(v) + "'");
}

std::int64_t as_int(const ParamValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return std::llround(*d);
  throw InvalidArgument("expected an integer parameter, got '" +
                        std::get<std::string>(v) + "'");
}

const std::string& as_string(const ParamValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw InvalidArgument("expected a string parameter");
}

nlohmann::ordered_json to_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return nlohmann::ordered_json(x); }, v);
}

ParamValue param_value_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw InvalidArgument("parameter values must be numbers or strings: " + j.dump());
}

nlohmann::ordered_json to_json(const Params& params) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, value] : params) j[name] = to_json(value);
  return j;
}

nlohmann::ordered_json to_json(const ParamSpec& spec) {
  nlohmann::ordered_json j;
  j["name"] = spec.name;
  switch (spec.kind) {
    case ParamKind::kFloat:
    case ParamKind::kInt:
      j["type"] = spec.kind == ParamKind::kFloat ? "float" : "int";
      j["low"] = spec.lo;
      j["high"] = spec.hi;
      j["log"] = spec.log;
      break;
    case ParamKind::kCategorical: {
      j["type"] = "categorical";
      auto choices = nlohmann::ordered_json::array();
      for (const auto& c : spec.choices) choices.push_back(to_json(c));
      j["choices"] = std::move(choices);
      break;
    }
  }
  if (spec.condition) {
    j["when"] = {{"param", spec.condition->parent},
                 {"equals", to_json(spec.condition->equals)}};
  }
  return j;
}

ParamSpec param_spec_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    const auto name = j.at("name").get<std::string>();
    ParamSpec spec;
    if (type == "float") {
      spec = ParamSpec::Float(name, j.at("low").get<double>(),
                              j.at("high").get<double>(), j.value("log", false));
    } else if (type == "int") {
      spec = ParamSpec::Int(name, j.at("low").get<std::int64_t>(),
                            j.at("high").get<std::int64_t>(), j.value("log", false));
    } else if (type == "categorical") {
      std::vector<ParamValue> choices;
      for (const auto& c : j.at("choices")) choices.push_back(param_value_from_json(c));
      spec = ParamSpec::Categorical(name, std::move(choices));
    } else {
      throw InvalidArgument("unknown parameter type '" + type + "'");
    }
    if (j.contains("when")) {
      spec.when(j.at("when").at("param").get<std::string>(),
                param_value_from_json(j.at("when").at("equals")));
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad parameter spec: ") + e.what());
  }
}

std::string canonical(const Params& params) { return to_json(params).dump(); }

}  // namespace intentune::optimize
