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

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "intentune/scoring.hpp"

namespace intentune::scoring {

// Binary scorer state: "AISC", u32 version (=1), u32 kind tag, then a
// little-endian payload.
//   knn:      u32 n, u32 d, u8 normalized, n*d f32, label bitsets
//   mlknn:    the knn payload, u32 k, prior, cond_pos, cond_neg as f64
//   logreg:   u32 C, u32 d, W (C*d f64), b (C f64)
//   zeroshot: u32 C, u32 d, u8 normalized, C*d f32
// Label bitsets take ceil(C / 8) bytes per row, bit j of byte j / 8.
std::string encode_scorer_state(const FittedScorer& scorer);

// Spec, task kind, class count, dimension and matrix model ids.
nlohmann::ordered_json scorer_meta_json(const FittedScorer& scorer);

FittedScorer decode_scorer(const std::string& bytes, const nlohmann::json& meta);

}  // namespace intentune::scoring
