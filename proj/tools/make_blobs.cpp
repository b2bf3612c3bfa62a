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

// Writes a synthetic blob dataset with its embedding store and a ready-to-run
// config, for trying the command line without a real embedding model.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "blobs.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic blob dataset", "make_blobs"};
  std::string out = "blobs";
  intentune::testing::BlobOptions options;
  bool nested = false;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", options.seed, "Random seed");
  app.add_option("--classes", options.n_classes, "Number of blobs");
  app.add_option("--oos-classes", options.n_oos_classes, "Blobs held out as out-of-scope");
  app.add_option("--train-per-class", options.train_per_class, "Training samples per class");
  app.add_option("--test-per-class", options.test_per_class, "Test samples per class");
  app.add_flag("--nested", nested, "Also write two coarser embedders for rank-embedders");
  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    const fs::path dir(out);
    fs::create_directories(dir);
    const auto data = intentune::testing::make_blobs(options);
    intentune::save_dataset(data.train, dir / "train.json");
    intentune::save_dataset(data.test, dir / "test.json");
    const auto ref = intentune::testing::write_blob_store(data, dir / "blobs.aiem");

    nlohmann::ordered_json embedders = nlohmann::ordered_json::array();
    auto add = [&](const intentune::EmbedderRef& r) {
      auto j = intentune::to_json(r);
      j["store"] = fs::path(r.location).filename().string();
      embedders.push_back(j);
    };
    add(ref);
    if (nested) {
      for (int group : {2, 4}) {
        const std::string id = "blobs_g" + std::to_string(group);
        const auto m = intentune::testing::coarsened_embeddings(data, options, group, id,
                                                                options.seed + group);
        add(intentune::testing::write_store(m, data.texts, dir / (id + ".aiem")));
      }
    }
    nlohmann::ordered_json config;
    config["dataset"] = "train.json";
    config["test_dataset"] = "test.json";
    config["search_space"] = {{"sampler", "tpe"}, {"budget", 30}};
    config["embedders"] = embedders;
    config["out"] = "run";
    config["seed"] = options.seed;
    std::ofstream(dir / "config.json") << config.dump(2) << "\n";
    std::cout << "wrote " << data.train.size() << " train and " << data.test.size()
              << " test samples to " << dir.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
