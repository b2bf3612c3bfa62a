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

#include "intentune/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace intentune {

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::kSingleLabel ? "single_label" : "multi_label";
}

TaskKind task_kind_from_string(std::string_view name) {
  if (name == "single_label") return TaskKind::kSingleLabel;
  if (name == "multi_label") return TaskKind::kMultiLabel;
  throw InvalidArgument("unknown task kind '" + std::string(name) + "'");
}

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidArgument("score matrix size does not match its shape");
  }
}

ScoreMatrix ScoreMatrix::select_rows(std::span<const std::size_t> rows) const {
  ScoreMatrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void validate_scores(const ScoreMatrix& scores, TaskKind kind,
                     double simplex_tol) {
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    double sum = 0.0;
    for (double v : scores.row(i)) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        std::ostringstream msg;
        msg << "score row " << i << " has a cell outside [0, 1]: " << v;
        throw RuntimeFailure(msg.str());
      }
      sum += v;
    }
    if (kind == TaskKind::kSingleLabel && std::abs(sum - 1.0) > simplex_tol) {
      std::ostringstream msg;
      msg << "single-label score row " << i << " sums to " << sum;
      throw RuntimeFailure(msg.str());
    }
  }
}

LabelSet make_label_set(std::vector<int> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

}  // namespace intentune
