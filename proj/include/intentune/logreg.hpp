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
#include <span>
#include <vector>

#include "intentune/types.hpp"

namespace intentune::scoring {

// Regularized logistic regression problem on dense double features.
// Single-label: softmax cross-entropy. Multi-label: one sigmoid per class,
// binary cross-entropy summed over classes. Both are averaged over rows and
// add (l2 / 2) * ||W||^2; the bias is not penalized.
struct LogRegProblem {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::size_t n_classes = 0;
  std::vector<double> features;  // rows x dim, row-major
  std::vector<LabelSet> labels;
  bool multilabel = false;
  double l2 = 0.0;

  // Parameter vector length: W (n_classes x dim, row-major) then b (n_classes).
  std::size_t num_params() const { return n_classes * dim + n_classes; }
};

// Loss at `params`; writes the analytic gradient into `grad` when it is
// non-empty (same layout as params).
double logreg_objective(const LogRegProblem& problem, std::span<const double> params,
                        std::span<double> grad);

struct LogRegSolution {
  std::vector<double> params;
  double loss = 0.0;
  int iterations = 0;
};

// Full-batch gradient descent from zero. A step that fails to lower the loss
// is rejected and the step size halved. Stops after `max_iter` iterations or
// once the gradient norm drops below 1e-6. Throws on a non-finite loss.
LogRegSolution solve_logreg(const LogRegProblem& problem, int max_iter);

}  // namespace intentune::scoring
