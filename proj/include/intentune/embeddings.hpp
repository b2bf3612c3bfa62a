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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "intentune/types.hpp"

namespace intentune {

// Dense n x d embedding rows (float32, row-major) produced by one embedder.
// Immutable after construction; the constructor rejects NaN/Inf and, when
// `normalized` is set, rows whose L2 norm is not within 1e-4 of one.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values,
                  std::string model_id = {}, bool normalized = false);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool normalized() const { return normalized_; }
  const std::string& model_id() const { return model_id_; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const float> values() const { return values_; }

  EmbeddingMatrix select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::string model_id_;
  bool normalized_ = false;
};

// Scales every row to unit L2 norm. Throws on a zero-norm row.
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m);

// Dot product accumulated in double precision, index order.
double dot(std::span<const float> a, std::span<const float> b);

struct Neighbor {
  std::size_t index = 0;
  double similarity = 0.0;

  bool operator==(const Neighbor&) const = default;
};

// Per query: k neighbors, similarity non-increasing, ties to the lower index.
using NeighborList = std::vector<std::vector<Neighbor>>;

// Exact top-k by cosine similarity (dot product of normalized rows). Queries
// may be split across `workers` threads; the result does not depend on it.
NeighborList cosine_topk(const EmbeddingMatrix& queries,
                         const EmbeddingMatrix& index, std::size_t k,
                         std::size_t workers = 1);

// Top-k of every row of `m` among the other rows of `m` (leave-one-out).
NeighborList cosine_topk_leave_one_out(const EmbeddingMatrix& m, std::size_t k,
                                       std::size_t workers = 1);

// A loaded embedding store: matrix plus text lookup by SHA-256 of the text.
struct EmbeddingStore {
  EmbeddingMatrix matrix;
  std::unordered_map<std::string, std::size_t> row_of_hash;

  // Row holding `text`, or nullopt on a miss.
  std::optional<std::size_t> find(std::string_view text) const;
};

// Binary layout: "AIEM", u32 version (=1), u32 n, u32 d, u8 normalized, then
// n*d little-endian float32. A sidecar `<path>.meta.json` holds the model id
// and the (sha256-hex, row) pairs.
void save_store(const EmbeddingMatrix& m, std::span<const std::string> texts,
                const std::filesystem::path& path);
EmbeddingStore load_store(const std::filesystem::path& path);

std::filesystem::path store_meta_path(const std::filesystem::path& path);

}  // namespace intentune
