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

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "blobs.hpp"
#include "intentune/cli.hpp"
#include "intentune/pipeline.hpp"

using namespace intentune;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "intentune");
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << s;
}

// A directory holding blob datasets, stores and a config.json.
struct Workspace {
  testing::TempDir dir{"cli"};
  testing::BlobOptions options;
  testing::BlobData data;
  json config;

  explicit Workspace(testing::BlobOptions o = small(), bool nested = false) : options(o) {
    data = testing::make_blobs(options);
    save_dataset(data.train, dir.path() / "train.json");
    save_dataset(data.test, dir.path() / "test.json");
    json embedders = json::array();
    auto add = [&](const EmbedderRef& r) {
      auto j = json::parse(to_json(r).dump());
      j["store"] = fs::path(r.location).filename().string();
      embedders.push_back(j);
    };
    add(testing::write_blob_store(data, dir.path() / "blobs.aiem"));
    if (nested) {
      for (int g : {2, 4}) {
        const std::string id = "blobs_g" + std::to_string(g);
        add(testing::write_store(testing::coarsened_embeddings(data, options, g, id, 100 + g),
                                 data.texts, dir.path() / (id + ".aiem")));
      }
    }
    config = {{"dataset", "train.json"},
              {"test_dataset", "test.json"},
              {"search_space", {{"sampler", "tpe"}, {"budget", 4}}},
              {"embedders", embedders},
              {"out", "run"},
              {"seed", 1}};
    save();
  }

  static testing::BlobOptions small() {
    testing::BlobOptions o;
    o.n_classes = 4;
    o.dim = 8;
    o.train_per_class = 16;
    o.test_per_class = 6;
    return o;
  }

  void save() const { write_file(cfg(), config.dump(2)); }
  fs::path cfg() const { return dir.path() / "config.json"; }
  fs::path out() const { return dir.path() / "run"; }
  fs::path artifact() const { return out() / "artifact"; }

  Run fit(std::vector<std::string> extra = {}) const {
    std::vector<std::string> args = {"--config", cfg().string()};
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back("fit");
    return run(args);
  }
};

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

}  // namespace

TEST_CASE("usage errors exit with 2 and help exits with 0") {
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"fit", "--no-such-flag"}).code == 2);
  CHECK(run({"--config", "/no/such/config.json", "fit"}).code == 2);
  Workspace ws;
  CHECK(ws.fit({"--format", "xml"}).code == 2);
  CHECK(ws.fit({"--seed", "-3"}).code == 2);
}

TEST_CASE("fit writes artifact, study log and report") {
  Workspace ws;
  const auto r = ws.fit();
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : kArtifactFiles) CHECK(fs::exists(ws.artifact() / f));
  CHECK(fs::exists(ws.out() / "study.jsonl"));
  const auto report = read_json(ws.out() / "report.json");
  CHECK(report.at("schema") == "intentune.fit.v1");
  CHECK(report.at("chosen").at("embedder") == "blobs");
  CHECK(report.at("test").at("accuracy").get<double>() >= 0.9);
  CHECK(report.at("stage_metrics").contains("scoring"));

  const auto& d = report.at("durations");
  const double sum = d.at("embedding_s").get<double>() + d.at("scoring_s").get<double>() +
                     d.at("decision_s").get<double>() + d.at("refit_s").get<double>();
  const double wall = report.at("wall_clock_s").get<double>();
  CHECK(std::abs(sum - wall) <= 0.05 * wall);

  std::istringstream log(read_file(ws.out() / "study.jsonl"));
  std::size_t lines = 0;
  for (std::string line; std::getline(log, line); ++lines) {
    const auto j = json::parse(line);
    CHECK((j.at("stage") == "scoring" || j.at("stage") == "decision"));
  }
  CHECK(lines == 4 + 4);
}

TEST_CASE("fit reports missing datasets and failed studies") {
  Workspace ws;
  ws.config["dataset"] = "absent.json";
  ws.save();
  auto r = ws.fit();
  CHECK(r.code == 2);
  CHECK(r.err.find("absent.json") != std::string::npos);

  Workspace failing;
  failing.config["search_space"]["scoring"] = json::array({{{"kind", "zeroshot"}}});
  failing.save();
  r = failing.fit();
  CHECK(r.code == 1);
  CHECK(r.err.find("first failure") != std::string::npos);
}

TEST_CASE("fit is deterministic for a fixed seed") {
  Workspace ws;
  REQUIRE(ws.fit({"--out", (ws.dir.path() / "a").string()}).code == 0);
  REQUIRE(ws.fit({"--out", (ws.dir.path() / "b").string()}).code == 0);
  for (const char* f : kArtifactFiles) {
    const auto a = ws.dir.path() / "a" / "artifact" / f;
    const auto b = ws.dir.path() / "b" / "artifact" / f;
    if (std::string(f) == "manifest.json") {
      auto ja = read_json(a), jb = read_json(b);
      for (auto* j : {&ja, &jb}) {
        j->erase("created_at");
        j->erase("durations");
      }
      CHECK(ja == jb);
    } else {
      CHECK_MESSAGE(read_file(a) == read_file(b), f);
    }
  }
}

TEST_CASE("seed precedence: flag, then environment, then config") {
  Workspace ws;
  auto seed_of = [&](std::vector<std::string> extra) {
    const auto r = ws.fit(extra);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return read_json(ws.out() / "report.json").at("seed").get<int>();
  };
  ::unsetenv("AUTOINTENT_SEED");
  CHECK(seed_of({}) == 1);
  ::setenv("AUTOINTENT_SEED", "7", 1);
  CHECK(seed_of({}) == 7);
  CHECK(seed_of({"--seed", "9"}) == 9);
  ::setenv("AUTOINTENT_SEED", "x", 1);
  CHECK(ws.fit().code == 2);
  ::unsetenv("AUTOINTENT_SEED");
}

TEST_CASE("predict writes one record per input in order") {
  Workspace ws;
  REQUIRE(ws.fit().code == 0);
  const auto texts = std::vector<std::string>{ws.data.test.samples[5].text,
                                              ws.data.test.samples[0].text,
                                              ws.data.test.samples[11].text};
  write_file(ws.dir.path() / "in.json", json(texts).dump());
  const auto out = ws.dir.path() / "pred.json";
  auto r = run({"predict", "--artifact", ws.artifact().string(), "--input",
                (ws.dir.path() / "in.json").string(), "--output", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto records = read_json(out);
  REQUIRE(records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(records[i].at("text") == texts[i]);
    CHECK(records[i].at("scores").size() == 4);
    CHECK(records[i].at("labels").size() == records[i].at("label_names").size());
  }
  CHECK(records[0].at("labels") == json(ws.data.test.samples[5].labels));

  write_file(ws.dir.path() / "in.txt", texts[0] + "\n" + texts[1] + "\n");
  r = run({"predict", "--artifact", ws.artifact().string(), "--input",
           (ws.dir.path() / "in.txt").string()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).size() == 2);

  r = run({"--config", ws.cfg().string(), "predict", "--artifact", ws.artifact().string(),
           "--input", (ws.dir.path() / "in.txt").string(), "--output", "-"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).size() == 2);
  CHECK_FALSE(fs::exists(ws.out() / "predictions.json"));

  write_file(ws.dir.path() / "empty.txt", "\n");
  r = run({"predict", "--artifact", ws.artifact().string(), "--input",
           (ws.dir.path() / "empty.txt").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("no inputs") != std::string::npos);

  r = run({"predict", "--artifact", (ws.dir.path() / "nope").string(), "--input",
           (ws.dir.path() / "in.txt").string()});
  CHECK(r.code == 1);
}

TEST_CASE("predict names an unreachable embedding endpoint") {
  Workspace ws;
  REQUIRE(ws.fit().code == 0);
  auto a = load_artifact(ws.artifact());
  a.embedder = EmbedderRef{"remote", EmbedderSource::kHttp, "http://127.0.0.1:1/v1", a.embedder.dim};
  const auto dir = ws.dir.path() / "remote-artifact";
  save_artifact(a, dir);
  write_file(ws.dir.path() / "in.txt", "hello\n");
  const auto r = run({"predict", "--artifact", dir.string(), "--input",
                      (ws.dir.path() / "in.txt").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("http://127.0.0.1:1/v1") != std::string::npos);
}

TEST_CASE("evaluate reports metrics and checks classes") {
  testing::BlobOptions o = Workspace::small();
  o.n_classes = 6;
  o.n_oos_classes = 2;
  Workspace ws(o);
  REQUIRE(ws.fit().code == 0);
  const auto train = (ws.dir.path() / "train.json").string();
  auto r = run({"evaluate", "--artifact", ws.artifact().string(), "--dataset", train});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = json::parse(r.out);
  CHECK(report.at("schema") == "intentune.evaluate.v1");
  CHECK(report.contains("oos_f1"));
  CHECK(report.contains("jinoos"));
  const auto manifest = read_json(ws.artifact() / "manifest.json");
  CHECK(report.at("accuracy").get<double>() >=
        manifest.at("stage_metrics").at("oof_report").at("accuracy").get<double>());

  r = run({"--format", "csv", "evaluate", "--artifact", ws.artifact().string(), "--dataset", train});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("metric,value\naccuracy,", 0) == 0);

  // In-domain rows only.
  Dataset in_domain = ws.data.test;
  std::erase_if(in_domain.samples, [](const Sample& s) { return s.is_oos(); });
  in_domain.has_oos = false;
  save_dataset(in_domain, ws.dir.path() / "in_domain.json");
  r = run({"evaluate", "--artifact", ws.artifact().string(), "--dataset",
           (ws.dir.path() / "in_domain.json").string()});
  REQUIRE(r.code == 0);
  CHECK_FALSE(json::parse(r.out).contains("oos_f1"));

  Dataset renamed = ws.data.test;
  renamed.classes[1].name = "something_else";
  save_dataset(renamed, ws.dir.path() / "renamed.json");
  r = run({"evaluate", "--artifact", ws.artifact().string(), "--dataset",
           (ws.dir.path() / "renamed.json").string()});
  CHECK(r.code == 2);
}

TEST_CASE("rank-embedders on nested embedders agrees across metrics") {
  testing::BlobOptions o = Workspace::small();
  o.n_classes = 8;
  o.dim = 16;
  o.train_per_class = 20;
  Workspace ws(o, true);
  const auto out = ws.dir.path() / "rank.json";
  auto r = run({"--config", ws.cfg().string(), "rank-embedders", "--output", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = read_json(out);
  CHECK(report.at("spearman").get<double>() == doctest::Approx(1.0));
  CHECK(report.at("top1").dump().find("blobs") != std::string::npos);

  auto single = ws.config;
  single["embedders"] = json::array({ws.config["embedders"][0]});
  write_file(ws.dir.path() / "single.json", single.dump());
  r = run({"--config", (ws.dir.path() / "single.json").string(), "rank-embedders"});
  CHECK(r.code == 2);

  write_file(ws.dir.path() / "blobs_g4.aiem", "not a store");
  r = run({"--config", ws.cfg().string(), "rank-embedders", "--output", out.string()});
  CHECK(r.code == 1);
}

TEST_CASE("fewshot-bench writes one row per shot count and seed") {
  testing::BlobOptions o = Workspace::small();
  o.train_per_class = 40;
  o.sigma = 2.5;
  Workspace ws(o);
  auto r = run({"--config", ws.cfg().string(), "fewshot-bench", "--shots", "2,32"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream csv(read_file(ws.out() / "fewshot.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("n_shots,seed,accuracy,macro_f1,duration_s", 0) == 0);
  std::map<int, std::vector<double>> acc;
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line); ++rows) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() >= 5);
    acc[std::stoi(cells[0])].push_back(std::stod(cells[2]));
  }
  CHECK(rows == 6);
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  CHECK(mean(acc[32]) >= mean(acc[2]));

  CHECK(run({"--config", ws.cfg().string(), "fewshot-bench", "--shots", "0"}).code == 2);
  CHECK(run({"--config", ws.cfg().string(), "fewshot-bench"}).code == 2);
}
