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

#include <atomic>
#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "intentune/embeddings.hpp"

namespace intentune {

enum class EmbedderSource { kStore, kHttp };

// Identity of an embedding model and where its vectors come from: a local
// embedding store file or an OpenAI-compatible HTTP endpoint.
struct EmbedderRef {
  std::string model_id;
  EmbedderSource source = EmbedderSource::kStore;
  std::string location;  // store path, or endpoint base URL
  std::size_t dim = 0;

  void validate() const;
  bool operator==(const EmbedderRef&) const = default;
};

nlohmann::ordered_json to_json(const EmbedderRef& ref);
EmbedderRef embedder_ref_from_json(const nlohmann::json& j);

struct HttpOptions {
  std::size_t max_in_flight = 4;
  std::size_t batch_size = 64;
  int attempts = 3;
  // Wait before retry i (1-based) is backoff * 2^(i-1).
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{30};
};

// Produces embeddings for texts, caching vectors by (model id, SHA-256 of the
// text). Stores are loaded lazily once per path. Safe to use from several
// threads: cache reads are shared, inserts exclusive.
class EmbeddingService {
 public:
  explicit EmbeddingService(HttpOptions http = {});

  // Rows follow `texts` order. Throws RuntimeFailure naming the missing text,
  // the failing endpoint, or the dimension mismatch.
  EmbeddingMatrix embed(const EmbedderRef& ref, std::span<const std::string> texts);

  // Backend round trips so far (HTTP requests or store lookups on cache miss).
  std::size_t backend_calls() const { return backend_calls_.load(); }
  std::size_t cache_entries() const;

 private:
  std::shared_ptr<const EmbeddingStore> store_for(const EmbedderRef& ref);
  std::vector<std::vector<float>> fetch_store(const EmbedderRef& ref,
                                              const std::vector<std::string>& texts);
  std::vector<std::vector<float>> fetch_http(const EmbedderRef& ref,
                                             const std::vector<std::string>& texts);
  std::vector<std::vector<float>> post_batch(const EmbedderRef& ref,
                                             std::span<const std::string> batch);

  HttpOptions http_;
  std::mutex stores_mutex_;
  std::map<std::string, std::shared_ptr<const EmbeddingStore>> stores_;
  mutable std::shared_mutex cache_mutex_;
  std::unordered_map<std::string, std::vector<float>> cache_;
  std::atomic<std::size_t> backend_calls_{0};
};

// Convenience wrapper over EmbeddingService::embed.
EmbeddingMatrix embed_texts(EmbeddingService& service, const EmbedderRef& ref,
                            std::span<const std::string> texts);

}  // namespace intentune
