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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "intentune/types.hpp"

namespace intentune {

struct ClassInfo {
  int id = 0;
  std::string name;
  // Free-text description, used by the zero-shot scorer.
  std::optional<std::string> description;

  bool operator==(const ClassInfo&) const = default;
};

struct Sample {
  std::string text;
  LabelSet labels;  // empty = out-of-scope

  bool is_oos() const { return labels.empty(); }
  bool operator==(const Sample&) const = default;
};

// A validated labeled text dataset. Construct through make_dataset() or
// load_dataset(); both enforce the invariants below.
//   * class ids are dense 0..C-1 (classes[i].id == i), names unique, C >= 2
//   * every label id < C, every text non-blank
//   * single-label tasks carry at most one label per sample
//   * has_oos is true iff some sample has an empty label set
struct Dataset {
  std::vector<ClassInfo> classes;
  std::vector<Sample> samples;
  TaskKind task_kind = TaskKind::kSingleLabel;
  bool has_oos = false;

  std::size_t num_classes() const { return classes.size(); }
  std::size_t size() const { return samples.size(); }
  bool all_classes_described() const;
  std::vector<std::string> texts() const;
  std::vector<LabelSet> labels() const;

  bool operator==(const Dataset&) const = default;
};

// Validates and infers task kind / OOS flag. `multilabel_flag` forces the
// multi-label kind even when no sample carries more than one label.
Dataset make_dataset(std::vector<ClassInfo> classes, std::vector<Sample> samples,
                     bool multilabel_flag = false);

// Copy of `ds` restricted to `rows`, in the given order. Classes are kept.
Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);

Dataset parse_dataset(const std::string& json_text);
Dataset load_dataset(const std::filesystem::path& path);
std::string dataset_to_json(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;  // one entry per sample

  std::vector<std::size_t> rows_in(int fold) const;
  std::vector<std::size_t> rows_not_in(int fold) const;
};

struct SplitIndices {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

// Stratified two-way split; `ratio` is the share of the first part. Both index
// lists are ascending.
SplitIndices stratified_split_indices(const Dataset& ds, double ratio,
                                      std::uint64_t seed);
std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double ratio,
                                             std::uint64_t seed);

// Stratified k-fold assignment. Single-label classes are dealt round-robin over
// a shuffled order, so per-class fold sizes differ by at most one. Multi-label
// data uses iterative stratification (rarest label first). OOS samples get a
// separate shuffled round-robin.
FoldAssignment stratified_kfold(const Dataset& ds, int k, std::uint64_t seed);

// Keeps min(n_shots, available) samples per class, chosen uniformly at random.
// OOS samples are kept unchanged. Classes smaller than n_shots keep all their
// samples and add a message to `warnings`.
Dataset few_shot_subsample(const Dataset& ds, int n_shots, std::uint64_t seed,
                           std::vector<std::string>* warnings = nullptr);

// Number of samples carrying each class id.
std::vector<std::size_t> class_counts(const Dataset& ds);

}  // namespace intentune
