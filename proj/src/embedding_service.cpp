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

#include "intentune/embedding_service.hpp"

#include <cstdlib>
#include <exception>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "intentune/sha256.hpp"

namespace intentune {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("endpoint URL lacks a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  return ep;
}

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

void EmbedderRef::validate() const {
  if (model_id.empty()) throw InvalidArgument("embedder model_id is empty");
  if (dim < 1) throw InvalidArgument("embedder '" + model_id + "' has dim < 1");
  if (location.empty()) {
    throw InvalidArgument("embedder '" + model_id + "' has no store path or endpoint");
  }
}

nlohmann::ordered_json to_json(const EmbedderRef& ref) {
  nlohmann::ordered_json j;
  j["model_id"] = ref.model_id;
  j[ref.source == EmbedderSource::kStore ? "store" : "endpoint"] = ref.location;
  j["dim"] = ref.dim;
  return j;
}

EmbedderRef embedder_ref_from_json(const nlohmann::json& j) {
  EmbedderRef ref;
  try {
    ref.model_id = j.at("model_id").get<std::string>();
    if (j.contains("store")) {
      ref.source = EmbedderSource::kStore;
      ref.location = j.at("store").get<std::string>();
    } else if (j.contains("endpoint")) {
      ref.source = EmbedderSource::kHttp;
      ref.location = j.at("endpoint").get<std::string>();
    } else {
      throw InvalidArgument("embedder '" + ref.model_id +
                            "' needs either 'store' or 'endpoint'");
    }
    ref.dim = j.at("dim").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad embedder reference: ") + e.what());
  }
  ref.validate();
  return ref;
}

EmbeddingService::EmbeddingService(HttpOptions http) : http_(http) {}

std::size_t EmbeddingService::cache_entries() const {
  std::shared_lock lock(cache_mutex_);
  return cache_.size();
}

EmbeddingMatrix EmbeddingService::embed(const EmbedderRef& ref,
                                        std::span<const std::string> texts) {
  ref.validate();
  if (texts.empty()) throw InvalidArgument("no texts to embed");

  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) keys.push_back(ref.model_id + '\n' + sha256_hex(t));

  std::vector<std::string> missing_texts;
  std::vector<std::string> missing_keys;
  {
    std::shared_lock lock(cache_mutex_);
    std::unordered_map<std::string, bool> queued;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (cache_.count(keys[i]) || queued.count(keys[i])) continue;
      queued.emplace(keys[i], true);
      missing_texts.push_back(texts[i]);
      missing_keys.push_back(keys[i]);
    }
  }

  if (!missing_texts.empty()) {
    auto fetched = ref.source == EmbedderSource::kStore
                       ? fetch_store(ref, missing_texts)
                       : fetch_http(ref, missing_texts);
    for (std::size_t i = 0; i < fetched.size(); ++i) {
      if (fetched[i].size() != ref.dim) {
        throw RuntimeFailure("embedder '" + ref.model_id + "' returned d=" +
                             std::to_string(fetched[i].size()) + ", expected d=" +
                             std::to_string(ref.dim));
      }
    }
    std::unique_lock lock(cache_mutex_);
    for (std::size_t i = 0; i < fetched.size(); ++i) {
      cache_.emplace(missing_keys[i], std::move(fetched[i]));
    }
  }

  std::vector<float> values;
  values.reserve(texts.size() * ref.dim);
  {
    std::shared_lock lock(cache_mutex_);
    for (const auto& key : keys) {
      const auto& row = cache_.at(key);
      values.insert(values.end(), row.begin(), row.end());
    }
  }
  return EmbeddingMatrix(texts.size(), ref.dim, std::move(values), ref.model_id);
}

std::shared_ptr<const EmbeddingStore> EmbeddingService::store_for(
    const EmbedderRef& ref) {
  std::lock_guard lock(stores_mutex_);
  auto it = stores_.find(ref.location);
  if (it == stores_.end()) {
    auto store = std::make_shared<const EmbeddingStore>(load_store(ref.location));
    if (store->matrix.dim() != ref.dim) {
      throw RuntimeFailure("store " + ref.location + " has d=" +
                           std::to_string(store->matrix.dim()) + " but embedder '" +
                           ref.model_id + "' declares d=" + std::to_string(ref.dim));
    }
    it = stores_.emplace(ref.location, std::move(store)).first;
  }
  return it->second;
}

std::vector<std::vector<float>> EmbeddingService::fetch_store(
    const EmbedderRef& ref, const std::vector<std::string>& texts) {
  const auto store = store_for(ref);
  ++backend_calls_;
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    const auto row = store->find(text);
    if (!row) {
      throw RuntimeFailure("text not found in store " + ref.location + ": '" +
                           text + "'");
    }
    auto values = store->matrix.row(*row);
    out.emplace_back(values.begin(), values.end());
  }
  return out;
}

std::vector<std::vector<float>> EmbeddingService::post_batch(
    const EmbedderRef& ref, std::span<const std::string> batch) {
  const Endpoint ep = parse_endpoint(ref.location);
  nlohmann::json body;
  body["model"] = ref.model_id;
  body["input"] = std::vector<std::string>(batch.begin(), batch.end());
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* token = std::getenv("AUTOINTENT_EMBED_TOKEN");
      token != nullptr && *token != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  std::string last_error;
  for (int attempt = 1; attempt <= http_.attempts; ++attempt) {
    httplib::Client client(ep.origin);
    client.set_connection_timeout(http_.timeout);
    client.set_read_timeout(http_.timeout);
    ++backend_calls_;
    auto res = client.Post(ep.path + "/embeddings", headers, payload,
                           "application/json");
    if (res && res->status == 200) {
      try {
        const auto doc = nlohmann::json::parse(res->body);
        const auto& data = doc.at("data");
        if (data.size() != batch.size()) {
          throw RuntimeFailure("endpoint " + ref.location + " returned " +
                               std::to_string(data.size()) + " embeddings for " +
                               std::to_string(batch.size()) + " inputs");
        }
        std::vector<std::vector<float>> out;
        out.reserve(data.size());
        for (const auto& item : data) {
          out.push_back(item.at("embedding").get<std::vector<float>>());
        }
        return out;
      } catch (const nlohmann::json::exception& e) {
        throw RuntimeFailure("endpoint " + ref.location +
                             " sent a malformed response: " + e.what());
      }
    }
    if (res) {
      last_error = "HTTP " + std::to_string(res->status);
      if (!retryable_status(res->status)) break;
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < http_.attempts) {
      std::this_thread::sleep_for(http_.backoff * (1 << (attempt - 1)));
    }
  }
  throw RuntimeFailure("embedding endpoint " + ref.location + " failed: " +
                       last_error);
}

std::vector<std::vector<float>> EmbeddingService::fetch_http(
    const EmbedderRef& ref, const std::vector<std::string>& texts) {
  const std::size_t batch = std::max<std::size_t>(1, http_.batch_size);
  const std::size_t n_batches = (texts.size() + batch - 1) / batch;
  std::vector<std::vector<std::vector<float>>> results(n_batches);
  std::vector<std::exception_ptr> errors(n_batches);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t b = next++; b < n_batches; b = next++) {
      const std::size_t begin = b * batch;
      const std::size_t len = std::min(batch, texts.size() - begin);
      try {
        results[b] = post_batch(ref, std::span(texts).subspan(begin, len));
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(http_.max_in_flight, n_batches));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (auto& r : results) {
    for (auto& v : r) out.push_back(std::move(v));
  }
  return out;
}

EmbeddingMatrix embed_texts(EmbeddingService& service, const EmbedderRef& ref,
                            std::span<const std::string> texts) {
  return service.embed(ref, texts);
}

}  // namespace intentune
