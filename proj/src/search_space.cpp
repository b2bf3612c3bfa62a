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

#include "intentune/search_space.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace intentune::optimize {

std::string_view to_string(Stage2Metric metric) {
  return metric == Stage2Metric::kArgmax ? "argmax" : "oos_balanced";
}

Stage2Metric stage2_metric_from_string(std::string_view name) {
  if (name == "argmax") return Stage2Metric::kArgmax;
  if (name == "oos_balanced") return Stage2Metric::kOosBalanced;
  throw InvalidArgument("unknown stage2_metric '" + std::string(name) + "'");
}

EmbedderRef resolve_ref(EmbedderRef ref, const std::filesystem::path& base_dir) {
  if (ref.source == EmbedderSource::kStore && !base_dir.empty()) {
    const std::filesystem::path p(ref.location);
    if (p.is_relative()) ref.location = (base_dir / p).lexically_normal().string();
  }
  return ref;
}

void SearchSpace::validate() const {
  if (scoring_budget < 1 || decision_budget < 1) {
    throw InvalidArgument("stage budgets must be at least 1");
  }
  if (n_folds < 2) throw InvalidArgument("n_folds must be at least 2");
  std::set<std::string> ids;
  for (const auto& ref : embedding.candidates) {
    ref.validate();
    if (!ids.insert(ref.model_id).second) {
      throw InvalidArgument("duplicate embedder candidate '" + ref.model_id + "'");
    }
  }
  if (embedding.strategy == selection::StrategyKind::kFixed) {
    if (!embedding.fixed) throw InvalidArgument("fixed embedding strategy needs 'fixed'");
    if (!ids.count(*embedding.fixed)) {
      throw InvalidArgument("fixed embedder '" + *embedding.fixed +
                            "' is not among the candidates");
    }
  } else if (embedding.candidates.empty()) {
    throw InvalidArgument("search space lists no embedder candidates");
  }
  if (embedding.k < 1) throw InvalidArgument("embedding.k must be at least 1");
  for (const auto& t : scoring) validate_space(t.params);
  for (const auto& t : decision) {
    if (t.kind == decision::RuleKind::kTunable && t.budget < 1) {
      throw InvalidArgument("tunable budget must be at least 1");
    }
  }
}

SearchSpace parse_search_space(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw InvalidArgument("search space must be a JSON object");
  SearchSpace s;
  try {
    s.seed = j.value("seed", s.seed);
    if (j.contains("sampler")) s.sampler = sampler_kind_from_string(j.at("sampler").get<std::string>());
    if (j.contains("budget")) {
      const auto& b = j.at("budget");
      if (b.is_number_integer()) {
        const auto n = b.get<long long>();
        if (n < 1) throw InvalidArgument("budget must be at least 1");
        s.scoring_budget = s.decision_budget = static_cast<std::size_t>(n);
      } else {
        s.scoring_budget = b.value("scoring", s.scoring_budget);
        s.decision_budget = b.value("decision", s.decision_budget);
      }
    }
    s.n_folds = j.value("n_folds", s.n_folds);
    if (j.contains("stage2_metric")) {
      s.stage2_metric = stage2_metric_from_string(j.at("stage2_metric").get<std::string>());
    }
    if (j.contains("embedding")) {
      const auto& e = j.at("embedding");
      if (e.contains("strategy")) {
        s.embedding.strategy =
            selection::strategy_kind_from_string(e.at("strategy").get<std::string>());
      }
      if (e.contains("metric")) {
        s.embedding.metric =
            selection::rank_metric_from_string(e.at("metric").get<std::string>());
      }
      s.embedding.k = e.value("k", s.embedding.k);
      if (e.contains("fixed")) s.embedding.fixed = e.at("fixed").get<std::string>();
      for (const auto& c : e.value("candidates", nlohmann::json::array())) {
        s.embedding.candidates.push_back(resolve_ref(embedder_ref_from_json(c), base_dir));
      }
    }
    for (const auto& t : j.value("scoring", nlohmann::json::array())) {
      ScorerTemplate tmpl;
      tmpl.kind = scoring::scorer_kind_from_string(t.at("kind").get<std::string>());
      if (t.contains("params")) {
        for (const auto& p : t.at("params")) tmpl.params.push_back(param_spec_from_json(p));
      } else {
        tmpl.params = scoring::default_param_space(tmpl.kind);
      }
      s.scoring.push_back(std::move(tmpl));
    }
    for (const auto& t : j.value("decision", nlohmann::json::array())) {
      s.decision.push_back(decision::rule_template_from_json(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad search space: ") + e.what());
  }
  for (const auto& t : s.scoring) validate_space(t.params);
  return s;
}

SearchSpace load_search_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open search space file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("cannot parse search space " + path.string() + ": " + e.what());
  }
  return parse_search_space(j, path.parent_path());
}

nlohmann::ordered_json to_json(const SearchSpace& space) {
  nlohmann::ordered_json j;
  j["seed"] = space.seed;
  j["sampler"] = to_string(space.sampler);
  j["budget"] = {{"scoring", space.scoring_budget}, {"decision", space.decision_budget}};
  j["n_folds"] = space.n_folds;
  if (space.stage2_metric) j["stage2_metric"] = to_string(*space.stage2_metric);
  nlohmann::ordered_json e;
  e["strategy"] = selection::to_string(space.embedding.strategy);
  e["metric"] = selection::to_string(space.embedding.metric);
  e["k"] = space.embedding.k;
  if (space.embedding.fixed) e["fixed"] = *space.embedding.fixed;
  e["candidates"] = nlohmann::ordered_json::array();
  for (const auto& c : space.embedding.candidates) e["candidates"].push_back(to_json(c));
  j["embedding"] = std::move(e);
  j["scoring"] = nlohmann::ordered_json::array();
  for (const auto& t : space.scoring) {
    nlohmann::ordered_json st;
    st["kind"] = scoring::to_string(t.kind);
    st["params"] = nlohmann::ordered_json::array();
    for (const auto& p : t.params) st["params"].push_back(to_json(p));
    j["scoring"].push_back(std::move(st));
  }
  j["decision"] = nlohmann::ordered_json::array();
  for (const auto& t : space.decision) j["decision"].push_back(decision::to_json(t));
  return j;
}

}  // namespace intentune::optimize
