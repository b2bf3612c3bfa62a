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

#include "intentune/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace intentune {
namespace {

using Json = nlohmann::ordered_json;

bool is_blank(const std::string& text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> rows(ds.num_classes());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    for (int label : ds.samples[i].labels) rows[label].push_back(i);
  }
  return rows;
}

std::vector<std::size_t> oos_rows(const Dataset& ds) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (ds.samples[i].is_oos()) rows.push_back(i);
  }
  return rows;
}

// Greedy iterative stratification: repeatedly take the label with the fewest
// unassigned samples and hand each of its samples to the part that still
// wants the most of that label. Returns the part id per sample (-1 for OOS).
std::vector<int> iterative_stratify(const Dataset& ds,
                                    const std::vector<double>& proportions,
                                    std::mt19937_64& rng) {
  const std::size_t parts = proportions.size();
  const std::size_t n_classes = ds.num_classes();
  std::vector<int> part_of(ds.size(), -1);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.samples[i].is_oos()) order.push_back(i);
  }
  std::shuffle(order.begin(), order.end(), rng);

  const auto counts = class_counts(ds);
  std::vector<std::vector<double>> desired(parts, std::vector<double>(n_classes));
  std::vector<double> desired_total(parts);
  for (std::size_t p = 0; p < parts; ++p) {
    for (std::size_t j = 0; j < n_classes; ++j) {
      desired[p][j] = proportions[p] * static_cast<double>(counts[j]);
    }
    desired_total[p] = proportions[p] * static_cast<double>(order.size());
  }

  std::vector<std::size_t> remaining_per_label = counts;
  std::vector<bool> assigned(ds.size(), false);
  std::size_t left = order.size();
  while (left > 0) {
    int rarest = -1;
    for (std::size_t j = 0; j < n_classes; ++j) {
      if (remaining_per_label[j] == 0) continue;
      if (rarest < 0 || remaining_per_label[j] < remaining_per_label[rarest]) {
        rarest = static_cast<int>(j);
      }
    }
    for (std::size_t idx : order) {
      if (assigned[idx] || !contains(ds.samples[idx].labels, rarest)) continue;
      std::size_t best = 0;
      for (std::size_t p = 1; p < parts; ++p) {
        if (desired[p][rarest] > desired[best][rarest] ||
            (desired[p][rarest] == desired[best][rarest] &&
             desired_total[p] > desired_total[best])) {
          best = p;
        }
      }
      part_of[idx] = static_cast<int>(best);
      assigned[idx] = true;
      --left;
      desired_total[best] -= 1.0;
      for (int label : ds.samples[idx].labels) {
        desired[best][label] -= 1.0;
        --remaining_per_label[label];
      }
    }
  }
  return part_of;
}

}  // namespace

bool Dataset::all_classes_described() const {
  return std::all_of(classes.begin(), classes.end(), [](const ClassInfo& c) {
    return c.description.has_value() && !c.description->empty();
  });
}

std::vector<std::string> Dataset::texts() const {
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.text);
  return out;
}

std::vector<LabelSet> Dataset::labels() const {
  std::vector<LabelSet> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.labels);
  return out;
}

Dataset make_dataset(std::vector<ClassInfo> classes, std::vector<Sample> samples,
                     bool multilabel_flag) {
  if (classes.empty()) throw InvalidArgument("empty class list");
  if (classes.size() < 2) throw InvalidArgument("dataset needs at least 2 classes");
  std::sort(classes.begin(), classes.end(),
            [](const ClassInfo& a, const ClassInfo& b) { return a.id < b.id; });
  std::set<std::string> names;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].id != static_cast<int>(i)) {
      throw InvalidArgument("class ids must be dense 0..C-1 (missing id " +
                            std::to_string(i) + ")");
    }
    if (classes[i].name.empty()) {
      throw InvalidArgument("class " + std::to_string(i) + " has an empty name");
    }
    if (!names.insert(classes[i].name).second) {
      throw InvalidArgument("duplicate class name '" + classes[i].name + "'");
    }
  }

  Dataset ds;
  ds.task_kind = multilabel_flag ? TaskKind::kMultiLabel : TaskKind::kSingleLabel;
  const int n_classes = static_cast<int>(classes.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& s = samples[i];
    if (is_blank(s.text)) {
      throw InvalidArgument("sample " + std::to_string(i) + " has blank text");
    }
    for (int label : s.labels) {
      if (label < 0 || label >= n_classes) {
        throw InvalidArgument("label out of range: sample " + std::to_string(i) +
                              " has label " + std::to_string(label) +
                              " but C=" + std::to_string(n_classes));
      }
    }
    s.labels = make_label_set(std::move(s.labels));
    if (s.labels.size() > 1) ds.task_kind = TaskKind::kMultiLabel;
    if (s.labels.empty()) ds.has_oos = true;
  }
  ds.classes = std::move(classes);
  ds.samples = std::move(samples);
  return ds;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.classes = ds.classes;
  out.task_kind = ds.task_kind;
  out.samples.reserve(rows.size());
  for (std::size_t r : rows) {
    out.samples.push_back(ds.samples.at(r));
    if (out.samples.back().is_oos()) out.has_oos = true;
  }
  return out;
}

Dataset parse_dataset(const std::string& json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument(std::string("dataset parse error: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("classes") || !doc.contains("samples")) {
      throw InvalidArgument(
          "dataset parse error: expected an object with 'classes' and 'samples'");
    }
    std::vector<ClassInfo> classes;
    for (const auto& c : doc.at("classes")) {
      ClassInfo info;
      info.id = c.at("id").get<int>();
      info.name = c.at("name").get<std::string>();
      if (c.contains("description") && !c.at("description").is_null()) {
        info.description = c.at("description").get<std::string>();
      }
      classes.push_back(std::move(info));
    }
    std::vector<Sample> samples;
    for (const auto& s : doc.at("samples")) {
      Sample sample;
      sample.text = s.at("text").get<std::string>();
      sample.labels = s.at("labels").get<std::vector<int>>();
      samples.push_back(std::move(sample));
    }
    const bool multilabel = doc.value("multilabel", false);
    return make_dataset(std::move(classes), std::move(samples), multilabel);
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("dataset parse error: ") + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open dataset file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::string dataset_to_json(const Dataset& ds) {
  Json doc;
  Json classes = Json::array();
  for (const auto& c : ds.classes) {
    Json item;
    item["id"] = c.id;
    item["name"] = c.name;
    if (c.description) item["description"] = *c.description;
    classes.push_back(std::move(item));
  }
  doc["classes"] = std::move(classes);
  Json samples = Json::array();
  for (const auto& s : ds.samples) {
    Json item;
    item["text"] = s.text;
    item["labels"] = s.labels;
    samples.push_back(std::move(item));
  }
  doc["samples"] = std::move(samples);
  if (ds.task_kind == TaskKind::kMultiLabel) doc["multilabel"] = true;
  return doc.dump(2);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write dataset file " + path.string());
  out << dataset_to_json(ds) << '\n';
}

std::vector<std::size_t> FoldAssignment::rows_in(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldAssignment::rows_not_in(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> class_counts(const Dataset& ds) {
  std::vector<std::size_t> counts(ds.num_classes(), 0);
  for (const auto& s : ds.samples) {
    for (int label : s.labels) ++counts[label];
  }
  return counts;
}

SplitIndices stratified_split_indices(const Dataset& ds, double ratio,
                                      std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidArgument("split ratio must lie in (0, 1)");
  }
  const auto counts = class_counts(ds);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 2) {
      throw InvalidArgument("class '" + ds.classes[j].name + "' has " +
                            std::to_string(counts[j]) +
                            " samples; a split needs at least 2");
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> in_first(ds.size(), false);
  if (ds.task_kind == TaskKind::kSingleLabel) {
    for (auto rows : rows_by_class(ds)) {
      std::shuffle(rows.begin(), rows.end(), rng);
      const auto n = static_cast<long>(rows.size());
      const long take =
          std::clamp(std::lround(ratio * static_cast<double>(n)), 1L, n - 1);
      for (long i = 0; i < take; ++i) in_first[rows[i]] = true;
    }
  } else {
    const auto part = iterative_stratify(ds, {ratio, 1.0 - ratio}, rng);
    for (std::size_t i = 0; i < ds.size(); ++i) in_first[i] = part[i] == 0;
  }
  auto oos = oos_rows(ds);
  std::shuffle(oos.begin(), oos.end(), rng);
  const long take_oos = std::lround(ratio * static_cast<double>(oos.size()));
  for (long i = 0; i < take_oos; ++i) in_first[oos[i]] = true;

  SplitIndices out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (in_first[i] ? out.first : out.second).push_back(i);
  }
  return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double ratio,
                                             std::uint64_t seed) {
  const auto idx = stratified_split_indices(ds, ratio, seed);
  return {subset(ds, idx.first), subset(ds, idx.second)};
}

FoldAssignment stratified_kfold(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("fold count must be at least 2");
  const auto counts = class_counts(ds);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < static_cast<std::size_t>(k)) {
      throw InvalidArgument("class '" + ds.classes[j].name + "' has " +
                            std::to_string(counts[j]) + " samples, fewer than k=" +
                            std::to_string(k));
    }
  }

  std::mt19937_64 rng(seed);
  FoldAssignment folds;
  folds.k = k;
  folds.fold_of.assign(ds.size(), -1);
  if (ds.task_kind == TaskKind::kSingleLabel) {
    int next = 0;
    for (auto rows : rows_by_class(ds)) {
      std::shuffle(rows.begin(), rows.end(), rng);
      for (std::size_t r : rows) {
        folds.fold_of[r] = next;
        next = (next + 1) % k;
      }
    }
  } else {
    const auto part =
        iterative_stratify(ds, std::vector<double>(k, 1.0 / k), rng);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (part[i] >= 0) folds.fold_of[i] = part[i];
    }
  }
  auto oos = oos_rows(ds);
  std::shuffle(oos.begin(), oos.end(), rng);
  for (std::size_t i = 0; i < oos.size(); ++i) {
    folds.fold_of[oos[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return folds;
}

Dataset few_shot_subsample(const Dataset& ds, int n_shots, std::uint64_t seed,
                           std::vector<std::string>* warnings) {
  if (n_shots < 1) throw InvalidArgument("n_shots must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<bool> keep(ds.size(), false);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.samples[i].is_oos()) keep[i] = true;
  }
  const auto target = static_cast<std::size_t>(n_shots);
  auto by_class = rows_by_class(ds);
  for (std::size_t j = 0; j < by_class.size(); ++j) {
    auto& rows = by_class[j];
    if (rows.size() < target && warnings != nullptr) {
      warnings->push_back("class '" + ds.classes[j].name + "' has only " +
                          std::to_string(rows.size()) + " samples (< " +
                          std::to_string(n_shots) + " shots); keeping all");
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    // Multi-label samples chosen for an earlier class already count here.
    std::size_t have = 0;
    for (std::size_t r : rows) have += keep[r] ? 1 : 0;
    for (std::size_t r : rows) {
      if (have >= target) break;
      if (!keep[r]) {
        keep[r] = true;
        ++have;
      }
    }
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (keep[i]) kept.push_back(i);
  }
  return subset(ds, kept);
}

}  // namespace intentune
