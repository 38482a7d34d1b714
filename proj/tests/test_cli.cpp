/*
 * Copyright 2026 The attrel Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// End-to-end checks of the attrel binary against the bundled toy dataset.
// Slow full-pipeline runs live in the acceptance suite; these cover command
// wiring, exit codes and file formats.

#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "attrel/embedding_store.hpp"
#include "attrel/factor_model.hpp"
#include "attrel/io.hpp"
#include "attrel/relation_schema.hpp"
#include "attrel/rng.hpp"
#include "testutil.hpp"

using namespace attrel;
using nlohmann::json;
using testutil::run_cli;

namespace {

const std::string kBin = ATTREL_CLI_PATH;
const std::string kToy = ATTREL_TOY_DIR;

std::string toy(const std::string& name) { return kToy + "/" + name; }

std::string train_args(const testutil::TempDir& dir, int epochs = 40) {
  return kBin + " train --embeddings " + toy("embeddings.txt") +
         " --associations " + toy("associations.tsv") + " --schema " +
         toy("schema.tsv") + " --unseen-file " + toy("unseen.txt") +
         " --epochs " + std::to_string(epochs) +
         " --seed 9 --factors 3 --lambda 1.5 -o " + dir.file("model.json");
}

}  // namespace

TEST_CASE("cli: train writes model and report") {
  testutil::TempDir dir;
  const auto r = run_cli(train_args(dir));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(std::filesystem::exists(dir.file("model.json")));
  CHECK(std::filesystem::exists(dir.file("model.json.report.json")));

  const auto report = json::parse(testutil::read_file(
      dir.file("model.json.report.json")));
  CHECK(report.contains("epoch_mean_loss"));
  CHECK(report.contains("final_loss"));
  CHECK(report.contains("seed"));
  CHECK(report["epoch_mean_loss"].size() == 40);

  // Loss curve is finite and ends lower than it starts.
  const auto curve = report["epoch_mean_loss"].get<std::vector<double>>();
  CHECK(curve.back() < curve.front());
}

TEST_CASE("cli: train with --epochs 0 writes exactly the initialization") {
  testutil::TempDir dir;
  const auto r = run_cli(train_args(dir, 0));
  REQUIRE(r.exit_code == 0);

  const auto written = load_model(dir.file("model.json"));

  // Rebuild the expected initialization through the library.
  const auto table = load_embeddings(toy("embeddings.txt"));
  auto ds = load_association_file(toy("associations.tsv"), "toy");
  ds.schema = load_semantic_schema(toy("schema.tsv"), ds.attributes);
  Matrix class_emb(ds.classes.size(), table.dim());
  for (std::size_t k = 0; k < ds.classes.size(); ++k) {
    const auto pv = embed_phrase(table, ds.classes.names[k]);
    std::copy(pv.vector.begin(), pv.vector.end(), class_emb.row(k).begin());
  }
  Matrix attr_emb(ds.attributes.size(), table.dim());
  for (std::size_t m = 0; m < ds.attributes.size(); ++m) {
    const auto pv = embed_phrase(table, ds.attributes.names[m]);
    std::copy(pv.vector.begin(), pv.vector.end(), attr_emb.row(m).begin());
  }
  const auto expected =
      init_model(table.dim(), ds.schema.n_relations(), 3, 1.5, class_emb,
                 attr_emb, 9, 0.1, ds.schema.relation_names,
                 ds.attributes.names);

  CHECK(written.mixing == expected.mixing);
  CHECK(written.attr_embeddings == expected.attr_embeddings);
  for (std::size_t l = 0; l < expected.n_factors; ++l)
    CHECK(written.factors[l] == expected.factors[l]);
}

TEST_CASE("cli: identical train runs produce byte-identical model files") {
  testutil::TempDir dir;
  REQUIRE(run_cli(train_args(dir)).exit_code == 0);
  const auto first = testutil::read_file(dir.file("model.json"));
  REQUIRE(run_cli(train_args(dir)).exit_code == 0);
  CHECK(first == testutil::read_file(dir.file("model.json")));
  CHECK(!first.empty());
}

TEST_CASE("cli: missing input file exits 2; bad usage exits 2") {
  testutil::TempDir dir;
  const auto missing = run_cli(
      kBin + " train --embeddings /nonexistent.txt --associations " +
      toy("associations.tsv") + " --schema " + toy("schema.tsv") + " -o " +
      dir.file("m.json"));
  CHECK(missing.exit_code == 2);

  CHECK(run_cli(kBin + " trainx").exit_code == 2);
  CHECK(run_cli(kBin + " train --no-such-flag").exit_code == 2);
  CHECK(run_cli(kBin + " --help").exit_code == 0);
}

TEST_CASE("cli: predict with fixed 0.5 thresholds decides everything") {
  testutil::TempDir dir;
  REQUIRE(run_cli(train_args(dir)).exit_code == 0);

  const auto r = run_cli(kBin + " predict --model " + dir.file("model.json") +
                         " --embeddings " + toy("embeddings.txt") +
                         " --schema " + toy("schema.tsv") +
                         " --class dolphin --class tiger" +
                         " -o " + dir.file("pred.tsv"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);

  const auto lines = read_lines(dir.file("pred.tsv"));
  CHECK(lines[0] == "class\tattribute\tprobability\tdecision");
  // 2 classes x 12 attributes.
  CHECK(lines.size() == 1 + 2 * 12);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_tabs(lines[i]);
    REQUIRE(fields.size() == 4);
    CHECK(fields[3] != "0");  // no abstentions at t-=t+=0.5
  }
}

TEST_CASE("cli: predict handles multi-word names and abstention bands") {
  testutil::TempDir dir;
  REQUIRE(run_cli(train_args(dir)).exit_code == 0);
  const auto r = run_cli(kBin + " predict --model " + dir.file("model.json") +
                         " --embeddings " + toy("embeddings.txt") +
                         " --schema " + toy("schema.tsv") +
                         " --class \"humpback whale\"" +
                         " --t-minus 0.4 --t-plus 0.6 -o " +
                         dir.file("pred.tsv"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  const auto text = testutil::read_file(dir.file("pred.tsv"));
  CHECK(text.find("humpback whale\t") != std::string::npos);
}

TEST_CASE("cli: predict with unknown class name exits 2 and suggests tokens") {
  testutil::TempDir dir;
  REQUIRE(run_cli(train_args(dir)).exit_code == 0);
  const auto r = run_cli(kBin + " predict --model " + dir.file("model.json") +
                         " --embeddings " + toy("embeddings.txt") +
                         " --schema " + toy("schema.tsv") +
                         " --class dolphim -o " + dir.file("pred.tsv"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("dolphim") != std::string::npos);
  CHECK(r.output.find("dolphin") != std::string::npos);  // suggestion
  CHECK(!std::filesystem::exists(dir.file("pred.tsv")));  // atomic: no partial
}

TEST_CASE("cli: zsl via the model route produces predictions and metrics") {
  testutil::TempDir dir;
  REQUIRE(run_cli(train_args(dir, 150)).exit_code == 0);
  const auto r = run_cli(
      kBin + " zsl --model " + dir.file("model.json") + " --embeddings " +
      toy("embeddings.txt") + " --schema " + toy("schema.tsv") +
      " --posteriors " + toy("posteriors.tsv") + " --unseen-file " +
      toy("unseen.txt") + " --out-predictions " + dir.file("zsl.tsv") +
      " --out-metrics " + dir.file("zsl.json"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);

  const auto metrics = json::parse(testutil::read_file(dir.file("zsl.json")));
  REQUIRE(metrics.contains("mean_per_class_accuracy"));
  CHECK(metrics["n_classes"] == 3);
  CHECK(metrics["n_images"] == 18);  // 3 unseen classes x 6 images
  const double acc = metrics["mean_per_class_accuracy"].get<double>();
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);

  const auto lines = read_lines(dir.file("zsl.tsv"));
  CHECK(lines[0] == "image_id\ttrue_class\tpredicted_class");
  CHECK(lines.size() == 1 + 18);
}

TEST_CASE("cli: zsl baseline selector dispatches on input kind") {
  testutil::TempDir dir;

  SUBCASE("dice consumes the hit-count file instead of a model") {
    const auto r = run_cli(
        kBin + " zsl --baseline dice --hit-counts " + toy("hit_counts.tsv") +
        " --associations " + toy("associations.tsv") + " --posteriors " +
        toy("posteriors.tsv") + " --unseen-file " + toy("unseen.txt") +
        " --out-metrics " + dir.file("m.json"));
    CAPTURE(r.output);
    REQUIRE(r.exit_code == 0);
    const auto metrics = json::parse(testutil::read_file(dir.file("m.json")));
    CHECK(metrics.contains("mean_per_class_accuracy"));
    CHECK(metrics["baseline"] == "dice");
  }

  SUBCASE("similarity and top-q run from embeddings") {
    for (const std::string b : {"similarity", "top-q"}) {
      const auto r = run_cli(
          kBin + " zsl --baseline " + b + " --embeddings " +
          toy("embeddings.txt") + " --associations " + toy("associations.tsv") +
          " --posteriors " + toy("posteriors.tsv") + " --unseen-file " +
          toy("unseen.txt") + " --out-metrics " + dir.file("m.json"));
      CAPTURE(b);
      CAPTURE(r.output);
      CHECK(r.exit_code == 0);
    }
  }

  SUBCASE("nearest-class and weighted-classes use classifier scores") {
    for (const std::string b : {"nearest-class", "weighted-classes"}) {
      const auto r = run_cli(
          kBin + " zsl --baseline " + b + " --embeddings " +
          toy("embeddings.txt") + " --class-scores " + toy("class_scores.tsv") +
          " --unseen-file " + toy("unseen.txt") + " --out-metrics " +
          dir.file("m.json"));
      CAPTURE(b);
      CAPTURE(r.output);
      CHECK(r.exit_code == 0);
    }
  }
}

TEST_CASE("cli: eval-assoc scores perfect predictions at 1.0") {
  testutil::TempDir dir;
  // Predictions read straight off the truth bits: probability 1/0.
  const auto truth = load_association_file(toy("associations.tsv"), "toy");
  std::ostringstream pred;
  pred << "class\tattribute\tprobability\tdecision\n";
  const std::vector<std::string> unseen{"dolphin", "tiger", "walrus"};
  for (const auto& cls : unseen) {
    const std::size_t k = truth.classes.index_of(cls);
    for (std::size_t m = 0; m < truth.attributes.size(); ++m) {
      const bool bit = truth.assoc.at(k, m) == Assoc::kPositive;
      pred << cls << '\t' << truth.attributes.names[m] << '\t'
           << (bit ? "1" : "0") << '\t' << (bit ? '+' : '-') << '\n';
    }
  }
  testutil::write_file(dir.file("pred.tsv"), pred.str());

  std::filesystem::create_directory(dir.path() / "pr");
  const auto r = run_cli(kBin + " eval-assoc --predictions " +
                         dir.file("pred.tsv") + " --truth " +
                         toy("associations.tsv") + " --schema " +
                         toy("schema.tsv") + " --out-metrics " +
                         dir.file("m.json") + " --pr-dir " + dir.file("pr"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);

  const auto metrics = json::parse(testutil::read_file(dir.file("m.json")));
  CHECK(metrics["mean_ap"] == 1.0);
  CHECK(metrics["accuracy"] == 1.0);

  // One PR file per relation.
  std::size_t pr_files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path() / "pr"))
    if (e.path().extension() == ".tsv") ++pr_files;
  CHECK(pr_files == 3);

  SUBCASE("shuffled prediction rows leave every output byte unchanged") {
    const auto metrics_bytes = testutil::read_file(dir.file("m.json"));
    const auto pr0 =
        testutil::read_file(dir.file("pr/pr_has_color.tsv"));

    auto lines = read_lines(dir.file("pred.tsv"));
    std::vector<std::string> rows(lines.begin() + 1, lines.end());
    Rng rng(3);
    rng.shuffle(rows);
    std::ostringstream shuffled;
    shuffled << lines[0] << '\n';
    for (const auto& row : rows) shuffled << row << '\n';
    testutil::write_file(dir.file("pred_shuffled.tsv"), shuffled.str());

    const auto r2 = run_cli(kBin + " eval-assoc --predictions " +
                            dir.file("pred_shuffled.tsv") + " --truth " +
                            toy("associations.tsv") + " --schema " +
                            toy("schema.tsv") + " --out-metrics " +
                            dir.file("m2.json") + " --pr-dir " +
                            dir.file("pr"));
    REQUIRE(r2.exit_code == 0);
    CHECK(testutil::read_file(dir.file("m2.json")) == metrics_bytes);
    CHECK(testutil::read_file(dir.file("pr/pr_has_color.tsv")) == pr0);
  }
}

TEST_CASE("cli: cluster-relations writes a usable schema") {
  testutil::TempDir dir;
  const auto r = run_cli(kBin + " cluster-relations --embeddings " +
                         toy("embeddings.txt") + " --associations " +
                         toy("associations.tsv") + " --n-clusters 3 -o " +
                         dir.file("dr.tsv"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);

  const auto table = load_embeddings(toy("embeddings.txt"));
  const auto ds = load_association_file(toy("associations.tsv"), "toy");
  const auto schema = load_semantic_schema(dir.file("dr.tsv"), ds.attributes);
  CHECK(schema.n_relations() == 3);

  // The toy attribute embeddings are built around relation-wise centers, so
  // 3 clusters recover the semantic grouping.
  const auto semantic = load_semantic_schema(toy("schema.tsv"), ds.attributes);
  std::map<std::size_t, std::set<std::size_t>> got, want;
  for (std::size_t m = 0; m < ds.attributes.size(); ++m) {
    got[schema.assignment[m]].insert(m);
    want[semantic.assignment[m]].insert(m);
  }
  std::set<std::set<std::size_t>> got_parts, want_parts;
  for (auto& [j, s] : got) got_parts.insert(s);
  for (auto& [j, s] : want) want_parts.insert(s);
  CHECK(got_parts == want_parts);
}

TEST_CASE("cli: calibrate writes a thresholds file predict can consume") {
  testutil::TempDir dir;
  const auto r = run_cli(
      kBin + " calibrate --embeddings " + toy("embeddings.txt") +
      " --associations " + toy("associations.tsv") + " --schema " +
      toy("schema.tsv") + " --unseen-file " + toy("unseen.txt") +
      " --posteriors " + toy("posteriors.tsv") +
      " --epochs 60 --seed 9 --factors 3 --lambda 1.5" +
      " --k-holdout 2 --folds 2 --grid-step 0.25 -o " + dir.file("thr.json"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);

  const auto thr = json::parse(testutil::read_file(dir.file("thr.json")));
  REQUIRE(thr.contains("t_minus"));
  REQUIRE(thr.contains("t_plus"));
  CHECK(thr["t_minus"].get<double>() <= thr["t_plus"].get<double>());

  REQUIRE(run_cli(train_args(dir)).exit_code == 0);
  const auto p = run_cli(kBin + " predict --model " + dir.file("model.json") +
                         " --embeddings " + toy("embeddings.txt") +
                         " --schema " + toy("schema.tsv") +
                         " --class dolphin --thresholds-file " +
                         dir.file("thr.json") + " -o " + dir.file("pred.tsv"));
  CAPTURE(p.output);
  CHECK(p.exit_code == 0);
}

TEST_CASE("cli: train with hyperparameter search records the selection") {
  testutil::TempDir dir;
  const auto r = run_cli(
      kBin + " train --embeddings " + toy("embeddings.txt") +
      " --associations " + toy("associations.tsv") + " --schema " +
      toy("schema.tsv") + " --unseen-file " + toy("unseen.txt") +
      " --epochs 30 --seed 9 --lambda 1.5 --search-factors 2 "
      "--search-factors 3 --search-folds 3 -o " +
      dir.file("model.json"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  const auto report = json::parse(
      testutil::read_file(dir.file("model.json.report.json")));
  REQUIRE(report.contains("selected_factors"));
  const std::size_t selected = report["selected_factors"].get<std::size_t>();
  CHECK((selected == 2 || selected == 3));
  CHECK(report["n_factors"] == selected);
  CHECK(report.contains("search_validation_map"));

  const auto model = load_model(dir.file("model.json"));
  CHECK(model.n_factors == selected);
}

TEST_CASE("cli: diverging training exits 1 naming the epoch") {
  testutil::TempDir dir;
  const auto r = run_cli(
      kBin + " train --embeddings " + toy("embeddings.txt") +
      " --associations " + toy("associations.tsv") + " --schema " +
      toy("schema.tsv") + " --learning-rate 1e18 --epochs 3 -o " +
      dir.file("model.json"));
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("non-finite loss") != std::string::npos);
  CHECK(r.output.find("epoch") != std::string::npos);
}

TEST_CASE("cli: config file supplies defaults, flags override") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("run.toml"),
                       "[train]\n"
                       "embeddings = \"" + toy("embeddings.txt") + "\"\n"
                       "associations = \"" + toy("associations.tsv") + "\"\n"
                       "schema = \"" + toy("schema.tsv") + "\"\n"
                       "epochs = 5\n"
                       "factors = 3\n"
                       "lambda = 1.5\n"
                       "seed = 9\n");
  const auto r = run_cli(kBin + " --config " + dir.file("run.toml") +
                         " train -o " + dir.file("model.json") +
                         " --epochs 2");
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  const auto report = json::parse(
      testutil::read_file(dir.file("model.json.report.json")));
  CHECK(report["epochs"] == 2);  // flag wins over config value
}
