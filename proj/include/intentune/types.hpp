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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace intentune {

// Sorted, duplicate-free class ids. An empty set marks an out-of-scope sample
// (or an out-of-scope prediction).
using LabelSet = std::vector<int>;

// One label set per sample.
using Prediction = std::vector<LabelSet>;

enum class TaskKind { kSingleLabel, kMultiLabel };

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view name);

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: malformed files, violated preconditions, bad configs.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// I/O, transport, or numerical failure at run time.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

// n x C per-class confidence scores, row-major.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}
  ScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {values_.data() + i * cols_, cols_};
  }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& at(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  const std::vector<double>& values() const { return values_; }

  // Rows selected by index, in the given order.
  ScoreMatrix select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const ScoreMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Checks the score-matrix contract: finite cells in [0, 1]; rows of a
// single-label matrix sum to one within `simplex_tol`.
void validate_scores(const ScoreMatrix& scores, TaskKind kind,
                     double simplex_tol = 1e-6);

// Normalizes a label list into a LabelSet (sorted, unique).
LabelSet make_label_set(std::vector<int> labels);

inline bool contains(const LabelSet& set, int label) {
  for (int l : set) {
    if (l == label) return true;
    if (l > label) return false;
  }
  return false;
}

}  // namespace intentune
