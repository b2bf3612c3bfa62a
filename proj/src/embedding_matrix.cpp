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

#include <algorithm>
#include <cmath>
#include <thread>

#include "intentune/embeddings.hpp"

namespace intentune {
namespace {

constexpr double kNormTolerance = 1e-4;

bool ranks_before(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.index < b.index;
}

template <typename Fn>
void for_each_block(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::jthread> threads;
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(n, begin + block);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

void check_topk_args(const EmbeddingMatrix& queries, const EmbeddingMatrix& index,
                     std::size_t k, std::size_t available) {
  if (queries.dim() != index.dim()) {
    throw InvalidArgument("dimension mismatch: queries have d=" +
                          std::to_string(queries.dim()) + ", index has d=" +
                          std::to_string(index.dim()));
  }
  if (k > available) {
    throw InvalidArgument("k=" + std::to_string(k) + " exceeds the " +
                          std::to_string(available) + " available index rows");
  }
  if (!queries.normalized() || !index.normalized()) {
    throw InvalidArgument("cosine_topk requires L2-normalized matrices");
  }
}

std::vector<Neighbor> topk_row(std::span<const float> query,
                               const EmbeddingMatrix& index, std::size_t k,
                               std::optional<std::size_t> skip) {
  std::vector<Neighbor> all;
  all.reserve(index.rows());
  for (std::size_t j = 0; j < index.rows(); ++j) {
    if (skip && *skip == j) continue;
    all.push_back({j, dot(query, index.row(j))});
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                    all.end(), ranks_before);
  all.resize(k);
  return all;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim,
                                 std::vector<float> values, std::string model_id,
                                 bool normalized)
    : rows_(rows),
      dim_(dim),
      values_(std::move(values)),
      model_id_(std::move(model_id)),
      normalized_(normalized) {
  if (values_.size() != rows_ * dim_) {
    throw InvalidArgument("embedding matrix holds " +
                          std::to_string(values_.size()) + " values, expected " +
                          std::to_string(rows_ * dim_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InvalidArgument("non-finite embedding value in row " +
                            std::to_string(dim_ ? i / dim_ : 0));
    }
  }
  if (normalized_) {
    for (std::size_t i = 0; i < rows_; ++i) {
      const double norm = std::sqrt(dot(row(i), row(i)));
      if (std::abs(norm - 1.0) > kNormTolerance) {
        throw InvalidArgument("row " + std::to_string(i) +
                              " is flagged normalized but has norm " +
                              std::to_string(norm));
      }
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::select_rows(
    std::span<const std::size_t> rows) const {
  std::vector<float> values;
  values.reserve(rows.size() * dim_);
  for (std::size_t r : rows) {
    auto src = row(r);
    values.insert(values.end(), src.begin(), src.end());
  }
  return EmbeddingMatrix(rows.size(), dim_, std::move(values), model_id_,
                         normalized_);
}

double dot(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m) {
  if (m.normalized()) return m;
  std::vector<float> values(m.values().begin(), m.values().end());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double norm = std::sqrt(dot(m.row(i), m.row(i)));
    if (norm == 0.0) {
      throw InvalidArgument("cannot normalize zero-norm row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < m.dim(); ++j) {
      auto& v = values[i * m.dim() + j];
      v = static_cast<float>(static_cast<double>(v) / norm);
    }
  }
  return EmbeddingMatrix(m.rows(), m.dim(), std::move(values), m.model_id(), true);
}

NeighborList cosine_topk(const EmbeddingMatrix& queries,
                         const EmbeddingMatrix& index, std::size_t k,
                         std::size_t workers) {
  check_topk_args(queries, index, k, index.rows());
  NeighborList out(queries.rows());
  for_each_block(queries.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q) {
      out[q] = topk_row(queries.row(q), index, k, std::nullopt);
    }
  });
  return out;
}

NeighborList cosine_topk_leave_one_out(const EmbeddingMatrix& m, std::size_t k,
                                       std::size_t workers) {
  check_topk_args(m, m, k, m.rows() == 0 ? 0 : m.rows() - 1);
  NeighborList out(m.rows());
  for_each_block(m.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q) {
      out[q] = topk_row(m.row(q), m, k, q);
    }
  });
  return out;
}

}  // namespace intentune
