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

#include "intentune/logreg.hpp"

#include <algorithm>
#include <cmath>

namespace intentune::scoring {
namespace {

constexpr double kInitialStep = 1.0;
constexpr double kGradTolerance = 1e-6;
constexpr double kMinStep = 1e-12;

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double logreg_objective(const LogRegProblem& p, std::span<const double> params,
                        std::span<double> grad) {
  const std::size_t C = p.n_classes;
  const std::size_t d = p.dim;
  const double* W = params.data();
  const double* b = params.data() + C * d;
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  std::vector<double> z(C);
  std::vector<double> dz(C);
  double loss = 0.0;
  for (std::size_t i = 0; i < p.rows; ++i) {
    const double* x = p.features.data() + i * d;
    for (std::size_t j = 0; j < C; ++j) {
      double s = b[j];
      const double* w = W + j * d;
      for (std::size_t t = 0; t < d; ++t) s += w[t] * x[t];
      z[j] = s;
    }
    const LabelSet& y = p.labels[i];
    if (p.multilabel) {
      for (std::size_t j = 0; j < C; ++j) {
        const double target = contains(y, static_cast<int>(j)) ? 1.0 : 0.0;
        loss += softplus(z[j]) - target * z[j];
        dz[j] = sigmoid(z[j]) - target;
      }
    } else {
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (std::size_t j = 0; j < C; ++j) sum += std::exp(z[j] - zmax);
      const double log_norm = zmax + std::log(sum);
      loss += log_norm - z[static_cast<std::size_t>(y.front())];
      for (std::size_t j = 0; j < C; ++j) {
        dz[j] = std::exp(z[j] - log_norm) - (static_cast<int>(j) == y.front() ? 1.0 : 0.0);
      }
    }
    if (want_grad) {
      for (std::size_t j = 0; j < C; ++j) {
        double* gw = grad.data() + j * d;
        for (std::size_t t = 0; t < d; ++t) gw[t] += dz[j] * x[t];
        grad[C * d + j] += dz[j];
      }
    }
  }

  const double inv_n = p.rows == 0 ? 0.0 : 1.0 / static_cast<double>(p.rows);
  double penalty = 0.0;
  for (std::size_t t = 0; t < C * d; ++t) penalty += W[t] * W[t];
  loss = loss * inv_n + 0.5 * p.l2 * penalty;
  if (want_grad) {
    for (std::size_t t = 0; t < C * d; ++t) grad[t] = grad[t] * inv_n + p.l2 * W[t];
    for (std::size_t j = 0; j < C; ++j) grad[C * d + j] *= inv_n;
  }
  return loss;
}

LogRegSolution solve_logreg(const LogRegProblem& problem, int max_iter) {
  LogRegSolution sol;
  sol.params.assign(problem.num_params(), 0.0);
  std::vector<double> grad(problem.num_params());
  std::vector<double> candidate(problem.num_params());
  std::vector<double> candidate_grad(problem.num_params());

  double loss = logreg_objective(problem, sol.params, grad);
  double step = kInitialStep;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (!std::isfinite(loss)) throw RuntimeFailure("logreg loss is not finite");
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    if (std::sqrt(norm) < kGradTolerance || step < kMinStep) break;
    sol.iterations = iter + 1;

    for (std::size_t t = 0; t < candidate.size(); ++t) {
      candidate[t] = sol.params[t] - step * grad[t];
    }
    const double next = logreg_objective(problem, candidate, candidate_grad);
    if (!std::isfinite(next)) throw RuntimeFailure("logreg loss is not finite");
    if (next < loss) {
      sol.params.swap(candidate);
      grad.swap(candidate_grad);
      loss = next;
    } else {
      step *= 0.5;
    }
  }
  sol.loss = loss;
  return sol;
}

}  // namespace intentune::scoring
