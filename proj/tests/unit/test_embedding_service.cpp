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

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "blobs.hpp"
#include "intentune/embedding_service.hpp"

using namespace intentune;

namespace {

// Minimal OpenAI-style embeddings server on 127.0.0.1.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::size_t dim = 3) : dim_(dim) {
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      {
        std::lock_guard lock(mutex_);
        last_auth_ = req.get_header_value("Authorization");
      }
      if (fail_next_ > 0) {
        --fail_next_;
        res.status = 503;
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      const auto inputs = body.at("input").get<std::vector<std::string>>();
      max_batch_ = std::max(max_batch_.load(), inputs.size());
      nlohmann::json out;
      out["data"] = nlohmann::json::array();
      for (const auto& text : inputs) {
        std::vector<float> v(dim_, 0.5f);
        v[0] = static_cast<float>(text.size());
        out["data"].push_back({{"embedding", v}});
      }
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int requests() const { return requests_; }
  std::size_t max_batch() const { return max_batch_; }
  void fail_next(int n) { fail_next_ = n; }
  std::string last_auth() {
    std::lock_guard lock(mutex_);
    return last_auth_;
  }

 private:
  std::size_t dim_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> fail_next_{0};
  std::atomic<std::size_t> max_batch_{0};
  std::mutex mutex_;
  std::string last_auth_;
};

HttpOptions fast_retries() {
  HttpOptions o;
  o.backoff = std::chrono::milliseconds(5);
  o.timeout = std::chrono::seconds(5);
  return o;
}

std::vector<std::string> numbered(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("text number " + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("store embedder returns rows in input order and caches them") {
  testing::TempDir dir("svc");
  const EmbeddingMatrix m(3, 2, {1, 0, 0, 1, 1, 1}, "toy");
  const std::vector<std::string> texts = {"a", "b", "c"};
  const auto ref = testing::write_store(m, texts, dir.path() / "toy.aiem");

  EmbeddingService service;
  const std::vector<std::string> query = {"c", "a", "b"};
  const auto out = embed_texts(service, ref, query);
  CHECK(out.rows() == 3);
  CHECK(out.row(0)[0] == 1.0f);
  CHECK(out.row(0)[1] == 1.0f);
  CHECK(out.row(1)[0] == 1.0f);
  CHECK(out.row(1)[1] == 0.0f);

  const auto calls = service.backend_calls();
  const auto again = embed_texts(service, ref, query);
  CHECK(again == out);
  CHECK(service.backend_calls() == calls);

  const std::vector<std::string> repeated = {"b", "b"};
  const auto rep = embed_texts(service, ref, repeated);
  CHECK(std::equal(rep.row(0).begin(), rep.row(0).end(), rep.row(1).begin()));
}

TEST_CASE("store embedder names a missing text") {
  testing::TempDir dir("svc-miss");
  const auto ref = testing::write_store(EmbeddingMatrix(1, 2, {1, 0}, "toy"),
                                        std::vector<std::string>{"known"},
                                        dir.path() / "toy.aiem");
  EmbeddingService service;
  const std::vector<std::string> query = {"known", "stranger"};
  CHECK_THROWS_WITH_AS(service.embed(ref, query), doctest::Contains("'stranger'"),
                       RuntimeFailure);
}

TEST_CASE("declared dimension must match the store") {
  testing::TempDir dir("svc-dim");
  auto ref = testing::write_store(EmbeddingMatrix(1, 2, {1, 0}, "toy"),
                                  std::vector<std::string>{"x"}, dir.path() / "toy.aiem");
  ref.dim = 5;
  EmbeddingService service;
  const std::vector<std::string> query = {"x"};
  CHECK_THROWS_AS(service.embed(ref, query), RuntimeFailure);
}

TEST_CASE("embedder reference JSON round trip") {
  const EmbedderRef store{"m", EmbedderSource::kStore, "a/b.aiem", 8};
  CHECK(embedder_ref_from_json(to_json(store)) == store);
  const EmbedderRef http{"m2", EmbedderSource::kHttp, "http://x/v1", 16};
  CHECK(embedder_ref_from_json(to_json(http)) == http);
  CHECK_THROWS_AS(embedder_ref_from_json(nlohmann::json::parse(R"({"model_id":"m"})")),
                  InvalidArgument);
}

TEST_CASE("http embedder batches, authenticates and caches") {
  FakeEndpoint endpoint;
  ::setenv("AUTOINTENT_EMBED_TOKEN", "s3cret", 1);
  const EmbedderRef ref{"remote", EmbedderSource::kHttp, endpoint.url(), 3};
  EmbeddingService service(fast_retries());
  const auto texts = numbered(150);
  const auto out = service.embed(ref, texts);
  ::unsetenv("AUTOINTENT_EMBED_TOKEN");

  CHECK(out.rows() == 150);
  CHECK(out.row(7)[0] == static_cast<float>(texts[7].size()));
  CHECK(endpoint.requests() == 3);
  CHECK(endpoint.max_batch() <= 64);
  CHECK(endpoint.last_auth() == "Bearer s3cret");

  const int before = endpoint.requests();
  const auto again = service.embed(ref, texts);
  CHECK(again == out);
  CHECK(endpoint.requests() == before);
}

TEST_CASE("http embedder retries transient failures") {
  FakeEndpoint endpoint;
  endpoint.fail_next(2);
  const EmbedderRef ref{"remote", EmbedderSource::kHttp, endpoint.url(), 3};
  EmbeddingService service(fast_retries());
  const auto out = service.embed(ref, numbered(2));
  CHECK(out.rows() == 2);
  CHECK(endpoint.requests() == 3);
}

TEST_CASE("http embedder gives up after three attempts") {
  FakeEndpoint endpoint;
  endpoint.fail_next(10);
  const EmbedderRef ref{"remote", EmbedderSource::kHttp, endpoint.url(), 3};
  EmbeddingService service(fast_retries());
  const std::string url = endpoint.url();
  CHECK_THROWS_WITH_AS(service.embed(ref, numbered(2)), doctest::Contains(url.c_str()),
                       RuntimeFailure);
  CHECK(endpoint.requests() == 3);
}

TEST_CASE("http embedder checks the returned dimension") {
  FakeEndpoint endpoint(4);
  const EmbedderRef ref{"remote", EmbedderSource::kHttp, endpoint.url(), 3};
  EmbeddingService service(fast_retries());
  CHECK_THROWS_WITH_AS(service.embed(ref, numbered(1)), doctest::Contains("expected d=3"),
                       RuntimeFailure);
}

TEST_CASE("unreachable endpoint is reported by URL") {
  const EmbedderRef ref{"remote", EmbedderSource::kHttp, "http://127.0.0.1:1/v1", 3};
  EmbeddingService service(fast_retries());
  CHECK_THROWS_WITH_AS(service.embed(ref, numbered(1)),
                       doctest::Contains("http://127.0.0.1:1/v1"), RuntimeFailure);
}
