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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "intentune/metrics.hpp"

using namespace intentune;
using namespace intentune::metrics;

namespace {

// Precision/recall oracle built from an explicit per-class confusion table.
struct Confusion {
  double tp = 0, fp = 0, fn = 0;
};

double oracle_f1(const Confusion& c) {
  const double p = c.tp + c.fp == 0 ? 0.0 : c.tp / (c.tp + c.fp);
  const double r = c.tp + c.fn == 0 ? 0.0 : c.tp / (c.tp + c.fn);
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

double oracle_macro(const Prediction& pred, const Prediction& truth, int C) {
  double sum = 0;
  int active = 0;
  for (int j = 0; j < C; ++j) {
    Confusion c;
    bool seen = false;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool p = std::find(pred[i].begin(), pred[i].end(), j) != pred[i].end();
      const bool t = std::find(truth[i].begin(), truth[i].end(), j) != truth[i].end();
      seen = seen || p || t;
      c.tp += p && t;
      c.fp += p && !t;
      c.fn += !p && t;
    }
    if (!seen) continue;
    sum += oracle_f1(c);
    ++active;
  }
  return active == 0 ? 0.0 : sum / active;
}

double oracle_oos_f1(const Prediction& pred, const Prediction& truth) {
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    c.tp += pred[i].empty() && truth[i].empty();
    c.fp += pred[i].empty() && !truth[i].empty();
    c.fn += !pred[i].empty() && truth[i].empty();
  }
  return oracle_f1(c);
}

LabelSet random_set(std::mt19937_64& rng, int C, bool multi) {
  std::uniform_int_distribution<int> cls(-1, C - 1);
  if (!multi) {
    const int c = cls(rng);
    return c < 0 ? LabelSet{} : LabelSet{c};
  }
  std::vector<int> labels;
  for (int j = 0; j < C; ++j) {
    if (std::bernoulli_distribution(0.35)(rng)) labels.push_back(j);
  }
  return make_label_set(labels);
}

}  // namespace

TEST_CASE("accuracy examples") {
  const Prediction truth = {{0}, {1}, {2}, {1}};
  CHECK(accuracy(truth, truth) == 1.0);
  CHECK(accuracy({{0}, {1}, {2}, {0}}, truth) == 0.75);
  CHECK(accuracy({{0, 1}}, {{0}}) == 0.0);
  CHECK(accuracy({{}, {1}}, {{}, {1}}) == 1.0);
  CHECK_THROWS_AS(accuracy({{0}}, {{0}, {1}}), InvalidArgument);
}

TEST_CASE("macro F1 examples") {
  const Prediction truth = {{0}, {1}, {1}};
  CHECK(macro_f1(truth, truth, 2).macro == 1.0);

  // class 0: TP 1, FP 1, FN 0; class 1: TP 1, FP 0, FN 1
  const auto r = macro_f1({{0}, {0}, {1}}, truth, 2);
  CHECK(r.per_class[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.per_class[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.macro == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // Class 2 never appears, so it is excluded from the mean.
  const auto excluded = macro_f1(truth, truth, 3);
  CHECK(excluded.macro == 1.0);
  CHECK(excluded.active_classes == 2);
  CHECK(excluded.per_class[2] == 0.0);

  CHECK_THROWS_AS(macro_f1({{0}}, {}, 2), InvalidArgument);
}

TEST_CASE("OOS F1 examples") {
  CHECK(oos_f1({{}, {0}}, {{}, {0}}) == 1.0);
  // TP row 0, FP row 1, FN row 2.
  CHECK(oos_f1({{}, {}, {1}, {0}}, {{}, {0}, {}, {0}}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(oos_f1({{0}}, {{0}}), InvalidArgument);
}

TEST_CASE("in-domain accuracy examples") {
  CHECK(in_domain_accuracy({{0}, {1}, {0}, {}}, {{0}, {1}, {}, {1}}) == doctest::Approx(2.0 / 3.0));
  CHECK(in_domain_accuracy({{0}, {1}, {2}}, {{0}, {1}, {}}) == 1.0);
  CHECK(in_domain_accuracy({{0}, {1}, {0}, {0}}, {{0}, {1}, {1}, {1}}) == 0.5);
  CHECK_THROWS_AS(in_domain_accuracy({{0}}, {{}}), InvalidArgument);
}

TEST_CASE("jinoos score examples") {
  const Prediction truth = {{0}, {1}, {}, {}};
  CHECK(jinoos_score(truth, truth) == 2.0);
  CHECK(jinoos_score({{0}, {1}, {0}, {1}}, truth) == 1.0);
  const Prediction t2 = {{0}, {1}, {2}, {0}, {}, {}};
  CHECK(jinoos_score({{0}, {1}, {2}, {1}, {}, {0}}, t2) == doctest::Approx(1.25));
  CHECK_THROWS_AS(jinoos_score({{0}}, {{0}}), InvalidArgument);
  CHECK_THROWS_AS(jinoos_score({{}}, {{}}), InvalidArgument);
}

TEST_CASE("F1 metrics match a confusion-matrix oracle on random instances") {
  std::mt19937_64 rng(7);
  for (int inst = 0; inst < 200; ++inst) {
    const int n = std::uniform_int_distribution<int>(1, 20)(rng);
    const int C = std::uniform_int_distribution<int>(1, 4)(rng);
    const bool multi = inst % 2 == 1;
    Prediction pred, truth;
    for (int i = 0; i < n; ++i) {
      pred.push_back(random_set(rng, C, multi));
      truth.push_back(random_set(rng, C, multi));
    }
    CHECK(std::abs(macro_f1(pred, truth, C).macro - oracle_macro(pred, truth, C)) <= 1e-12);
    const bool has_oos = std::any_of(truth.begin(), truth.end(), [](auto& t) { return t.empty(); });
    if (has_oos) {
      CHECK(std::abs(oos_f1(pred, truth) - oracle_oos_f1(pred, truth)) <= 1e-12);
    }
  }
}

TEST_CASE("metrics are permutation invariant and jinoos decomposes") {
  std::mt19937_64 rng(11);
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 12, C = 3;
    Prediction pred, truth;
    for (int i = 0; i < n; ++i) {
      pred.push_back(random_set(rng, C, false));
      truth.push_back(random_set(rng, C, false));
    }
    truth[0] = {};
    truth[1] = {0};
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Prediction pp, tp;
    for (auto i : perm) {
      pp.push_back(pred[i]);
      tp.push_back(truth[i]);
    }
    const auto a = evaluate(pred, truth, C);
    const auto b = evaluate(pp, tp, C);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.macro_f1 == doctest::Approx(b.macro_f1).epsilon(1e-12));
    CHECK(*a.oos_f1 == *b.oos_f1);
    CHECK(*a.in_domain_accuracy == *b.in_domain_accuracy);
    CHECK(*a.jinoos ==
          doctest::Approx(in_domain_accuracy(pred, truth) + oos_accuracy(pred, truth)));
    CHECK(*a.jinoos >= 0.0);
    CHECK(*a.jinoos <= 2.0);
  }
}

TEST_CASE("evaluate report and JSON") {
  const Prediction truth = {{0}, {1}};
  const auto report = evaluate(truth, truth, 2);
  CHECK_FALSE(report.oos_f1.has_value());
  CHECK(report.n_samples == 2);
  const auto j = to_json(report);
  CHECK(j.at("accuracy") == 1.0);
  CHECK_FALSE(j.contains("oos_f1"));
}
