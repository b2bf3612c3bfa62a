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

#include "intentune/scorer_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>

#include <nlohmann/json.hpp>

namespace intentune::scoring {
namespace {

constexpr std::array<char, 4> kMagic = {'A', 'I', 'S', 'C'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const std::vector<double>& vs) {
    for (double v : vs) f64(v);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    }
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    }
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64s(std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }
  void expect_end() const {
    if (pos_ != in_.size()) throw RuntimeFailure("scorer.bin has trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw RuntimeFailure("scorer.bin is truncated");
  }

  const std::string& in_;
  std::size_t pos_ = 0;
};

std::uint32_t kind_tag(const ScorerState& state) {
  return static_cast<std::uint32_t>(state.index());
}

void write_matrix(Writer& w, const EmbeddingMatrix& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.dim()));
  w.u8(m.normalized() ? 1 : 0);
  for (float v : m.values()) w.f32(v);
}

EmbeddingMatrix read_matrix(Reader& r, const std::string& model_id) {
  const std::size_t rows = r.u32();
  const std::size_t dim = r.u32();
  const bool normalized = r.u8() != 0;
  std::vector<float> values(rows * dim);
  for (auto& v : values) v = r.f32();
  return EmbeddingMatrix(rows, dim, std::move(values), model_id, normalized);
}

void write_labels(Writer& w, const std::vector<LabelSet>& labels, std::size_t n_classes) {
  const std::size_t width = (n_classes + 7) / 8;
  for (const auto& set : labels) {
    std::string bits(width, '\0');
    for (int l : set) bits[l / 8] = static_cast<char>(bits[l / 8] | (1 << (l % 8)));
    w.bytes(bits.data(), bits.size());
  }
}

std::vector<LabelSet> read_labels(Reader& r, std::size_t rows, std::size_t n_classes) {
  const std::size_t width = (n_classes + 7) / 8;
  std::vector<LabelSet> out(rows);
  for (auto& set : out) {
    std::vector<std::uint8_t> bits(width);
    for (auto& b : bits) b = r.u8();
    for (std::size_t j = 0; j < n_classes; ++j) {
      if ((bits[j / 8] >> (j % 8)) & 1) set.push_back(static_cast<int>(j));
    }
  }
  return out;
}

std::string matrix_model_id(const ScorerState& state) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LogRegState>) {
          return {};
        } else if constexpr (std::is_same_v<T, ZeroShotState>) {
          return s.descriptions.model_id();
        } else {
          return s.train.model_id();
        }
      },
      state);
}

}  // namespace

std::string encode_scorer_state(const FittedScorer& scorer) {
  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kVersion);
  w.u32(kind_tag(scorer.state()));
  const std::size_t C = scorer.n_classes();
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, KnnState>) {
          write_matrix(w, s.train);
          write_labels(w, s.labels, C);
        } else if constexpr (std::is_same_v<T, MlKnnState>) {
          write_matrix(w, s.train);
          write_labels(w, s.labels, C);
          w.u32(static_cast<std::uint32_t>(s.k));
          w.f64s(s.prior);
          w.f64s(s.cond_pos);
          w.f64s(s.cond_neg);
        } else if constexpr (std::is_same_v<T, LogRegState>) {
          w.u32(static_cast<std::uint32_t>(C));
          w.u32(static_cast<std::uint32_t>(scorer.dim()));
          w.f64s(s.weights);
          w.f64s(s.bias);
        } else {
          write_matrix(w, s.descriptions);
        }
      },
      scorer.state());
  return w.take();
}

nlohmann::ordered_json scorer_meta_json(const FittedScorer& scorer) {
  nlohmann::ordered_json j;
  j["spec"] = to_json(scorer.spec());
  j["task_kind"] = to_string(scorer.task_kind());
  j["n_classes"] = scorer.n_classes();
  j["dim"] = scorer.dim();
  j["matrix_model_id"] = matrix_model_id(scorer.state());
  return j;
}

FittedScorer decode_scorer(const std::string& bytes, const nlohmann::json& meta) {
  ScorerSpec spec;
  TaskKind task;
  std::size_t C = 0;
  std::size_t dim = 0;
  std::string model_id;
  try {
    spec = scorer_spec_from_json(meta.at("spec"));
    task = task_kind_from_string(meta.at("task_kind").get<std::string>());
    C = meta.at("n_classes").get<std::size_t>();
    dim = meta.at("dim").get<std::size_t>();
    model_id = meta.value("matrix_model_id", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure(std::string("bad scorer.json: ") + e.what());
  }

  if (bytes.size() < kMagic.size() ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw RuntimeFailure("scorer.bin is not a scorer state file");
  }
  Reader r(bytes);
  for (std::size_t i = 0; i < kMagic.size(); ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw RuntimeFailure("scorer.bin has unsupported version " + std::to_string(version));
  }
  const std::uint32_t tag = r.u32();
  ScorerState state;
  switch (tag) {
    case 0: {
      KnnState s;
      s.train = read_matrix(r, model_id);
      s.labels = read_labels(r, s.train.rows(), C);
      state = std::move(s);
      break;
    }
    case 1: {
      MlKnnState s;
      s.train = read_matrix(r, model_id);
      s.labels = read_labels(r, s.train.rows(), C);
      s.k = r.u32();
      s.prior = r.f64s(C);
      s.cond_pos = r.f64s(C * (s.k + 1));
      s.cond_neg = r.f64s(C * (s.k + 1));
      state = std::move(s);
      break;
    }
    case 2: {
      const std::size_t c = r.u32();
      const std::size_t d = r.u32();
      if (c != C || d != dim) throw RuntimeFailure("scorer.bin shape disagrees with scorer.json");
      LogRegState s;
      s.weights = r.f64s(c * d);
      s.bias = r.f64s(c);
      state = std::move(s);
      break;
    }
    case 3:
      state = ZeroShotState{read_matrix(r, model_id)};
      break;
    default:
      throw RuntimeFailure("scorer.bin has unknown scorer tag " + std::to_string(tag));
  }
  r.expect_end();
  if (static_cast<std::uint32_t>(spec.kind) != tag) {
    throw RuntimeFailure("scorer.bin kind disagrees with scorer.json");
  }
  try {
    return FittedScorer(spec, task, C, dim, std::move(state));
  } catch (const InvalidArgument& e) {
    throw RuntimeFailure(std::string("inconsistent scorer state: ") + e.what());
  }
}

}  // namespace intentune::scoring
