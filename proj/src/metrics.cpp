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

#include "intentune/metrics.hpp"

#include <nlohmann/json.hpp>

namespace intentune::metrics {
namespace {

void check_lengths(const Prediction& pred, const Prediction& truth) {
  if (pred.size() != truth.size()) {
    throw InvalidArgument("length mismatch: " + std::to_string(pred.size()) +
                          " predictions vs " + std::to_string(truth.size()) +
                          " truth rows");
  }
}

std::size_t count_oos(const Prediction& truth) {
  std::size_t n = 0;
  for (const auto& t : truth) n += t.empty() ? 1 : 0;
  return n;
}

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double accuracy(const Prediction& pred, const Prediction& truth) {
  check_lengths(pred, truth);
  if (truth.empty()) throw InvalidArgument("accuracy of an empty prediction set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

F1Result macro_f1(const Prediction& pred, const Prediction& truth,
                  std::size_t n_classes) {
  check_lengths(pred, truth);
  std::vector<std::size_t> tp(n_classes), fp(n_classes), fn(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = 0; j < n_classes; ++j) {
      const bool p = contains(pred[i], static_cast<int>(j));
      const bool t = contains(truth[i], static_cast<int>(j));
      if (p && t) ++tp[j];
      else if (p) ++fp[j];
      else if (t) ++fn[j];
    }
  }
  F1Result out;
  out.per_class.assign(n_classes, 0.0);
  double sum = 0.0;
  for (std::size_t j = 0; j < n_classes; ++j) {
    if (tp[j] + fp[j] + fn[j] == 0) continue;
    out.per_class[j] = f1_from_counts(tp[j], fp[j], fn[j]);
    sum += out.per_class[j];
    ++out.active_classes;
  }
  out.macro = out.active_classes == 0 ? 0.0 : sum / static_cast<double>(out.active_classes);
  return out;
}

double oos_f1(const Prediction& pred, const Prediction& truth) {
  check_lengths(pred, truth);
  if (count_oos(truth) == 0) throw InvalidArgument("oos_f1 needs at least one OOS row");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = pred[i].empty();
    const bool t = truth[i].empty();
    if (p && t) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
  }
  return f1_from_counts(tp, fp, fn);
}

double in_domain_accuracy(const Prediction& pred, const Prediction& truth) {
  check_lengths(pred, truth);
  std::size_t rows = 0, hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].empty()) continue;
    ++rows;
    hits += pred[i] == truth[i] ? 1 : 0;
  }
  if (rows == 0) throw InvalidArgument("in-domain accuracy needs an in-domain row");
  return static_cast<double>(hits) / static_cast<double>(rows);
}

double oos_accuracy(const Prediction& pred, const Prediction& truth) {
  check_lengths(pred, truth);
  const std::size_t rows = count_oos(truth);
  if (rows == 0) throw InvalidArgument("OOS accuracy needs an OOS row");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hits += truth[i].empty() && pred[i].empty() ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(rows);
}

double jinoos_score(const Prediction& pred, const Prediction& truth) {
  return in_domain_accuracy(pred, truth) + oos_accuracy(pred, truth);
}

double in_domain_macro_f1(const Prediction& pred, const Prediction& truth,
                          std::size_t n_classes) {
  check_lengths(pred, truth);
  Prediction p, t;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].empty()) continue;
    p.push_back(pred[i]);
    t.push_back(truth[i]);
  }
  return macro_f1(p, t, n_classes).macro;
}

EvalReport evaluate(const Prediction& pred, const Prediction& truth,
                    std::size_t n_classes) {
  EvalReport report;
  report.n_samples = truth.size();
  report.accuracy = accuracy(pred, truth);
  auto f1 = macro_f1(pred, truth, n_classes);
  report.macro_f1 = f1.macro;
  report.per_class_f1 = std::move(f1.per_class);
  const std::size_t n_oos = count_oos(truth);
  if (n_oos > 0 && n_oos < truth.size()) {
    report.oos_f1 = oos_f1(pred, truth);
    report.in_domain_accuracy = in_domain_accuracy(pred, truth);
    report.jinoos = jinoos_score(pred, truth);
  }
  return report;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["macro_f1"] = report.macro_f1;
  j["per_class_f1"] = report.per_class_f1;
  if (report.in_domain_accuracy) j["in_domain_accuracy"] = *report.in_domain_accuracy;
  if (report.oos_f1) j["oos_f1"] = *report.oos_f1;
  if (report.jinoos) j["jinoos"] = *report.jinoos;
  j["n_samples"] = report.n_samples;
  return j;
}

}  // namespace intentune::metrics
