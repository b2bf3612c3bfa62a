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

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "intentune/embeddings.hpp"
#include "intentune/sha256.hpp"

namespace intentune {
namespace {

constexpr std::array<char, 4> kMagic = {'A', 'I', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i]))
         << (8 * i);
  }
  return v;
}

}  // namespace

std::filesystem::path store_meta_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view text) const {
  const auto it = row_of_hash.find(sha256_hex(text));
  if (it == row_of_hash.end()) return std::nullopt;
  return it->second;
}

void save_store(const EmbeddingMatrix& m, std::span<const std::string> texts,
                const std::filesystem::path& path) {
  if (texts.size() != m.rows()) {
    throw InvalidArgument("store has " + std::to_string(m.rows()) + " rows but " +
                          std::to_string(texts.size()) + " texts");
  }
  std::string bytes(kMagic.begin(), kMagic.end());
  put_u32(bytes, kVersion);
  put_u32(bytes, static_cast<std::uint32_t>(m.rows()));
  put_u32(bytes, static_cast<std::uint32_t>(m.dim()));
  bytes.push_back(m.normalized() ? 1 : 0);
  for (float v : m.values()) put_u32(bytes, std::bit_cast<std::uint32_t>(v));

  nlohmann::ordered_json meta;
  meta["model_id"] = m.model_id();
  auto rows = nlohmann::ordered_json::array();
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto hash = sha256_hex(texts[i]);
    if (!seen.emplace(hash, i).second) {
      throw InvalidArgument("duplicate text in store: '" + texts[i] + "'");
    }
    rows.push_back({std::move(hash), i});
  }
  meta["rows"] = std::move(rows);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write embedding store " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  std::ofstream meta_out(store_meta_path(path), std::ios::binary);
  if (!meta_out) {
    throw RuntimeFailure("cannot write " + store_meta_path(path).string());
  }
  meta_out << meta.dump(1) << '\n';
  if (!out || !meta_out) throw RuntimeFailure("write failed for " + path.string());
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open embedding store " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw RuntimeFailure(path.string() + " is not an embedding store");
  }
  if (bytes.size() < kHeaderBytes) {
    throw RuntimeFailure(path.string() + ": truncated embedding store header");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kVersion) {
    throw RuntimeFailure(path.string() + ": unsupported store version " +
                         std::to_string(version));
  }
  const std::size_t n = get_u32(bytes, 8);
  const std::size_t d = get_u32(bytes, 12);
  const bool normalized = bytes[16] != 0;
  if (bytes.size() != kHeaderBytes + 4 * n * d) {
    throw RuntimeFailure(path.string() + ": truncated embedding store (expected " +
                         std::to_string(kHeaderBytes + 4 * n * d) + " bytes, got " +
                         std::to_string(bytes.size()) + ")");
  }
  std::vector<float> values(n * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  }

  std::ifstream meta_in(store_meta_path(path), std::ios::binary);
  if (!meta_in) {
    throw RuntimeFailure("missing store sidecar " + store_meta_path(path).string());
  }
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure(store_meta_path(path).string() + ": " + e.what());
  }

  EmbeddingStore store;
  try {
    store.matrix = EmbeddingMatrix(n, d, std::move(values),
                                   meta.at("model_id").get<std::string>(),
                                   normalized);
    for (const auto& entry : meta.at("rows")) {
      auto hash = entry.at(0).get<std::string>();
      const auto row = entry.at(1).get<std::size_t>();
      if (row >= n) {
        throw RuntimeFailure(path.string() + ": sidecar row " +
                             std::to_string(row) + " out of range");
      }
      if (!store.row_of_hash.emplace(std::move(hash), row).second) {
        throw RuntimeFailure(path.string() +
                             ": hash collision in store sidecar, rejecting store");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure(store_meta_path(path).string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw RuntimeFailure(path.string() + ": " + e.what());
  }
  return store;
}

}  // namespace intentune
