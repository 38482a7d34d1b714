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

// Acceptance suite: one line per criterion, nonzero exit when any fails.
//
//   acceptance_tests --bin <path to attrel binary> --data <toy dataset dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "attrel/association_predictor.hpp"
#include "attrel/eval_metrics.hpp"
#include "attrel/factor_model.hpp"
#include "attrel/io.hpp"
#include "attrel/kernels.hpp"
#include "attrel/relation_schema.hpp"
#include "attrel/rng.hpp"
#include "attrel/zsl_engine.hpp"
#include "testutil.hpp"

using namespace attrel;
using nlohmann::json;

namespace {

std::string g_bin;
std::string g_data;

struct Failure : std::runtime_error {
  explicit Failure(const std::string& msg) : std::runtime_error(msg) {}
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw Failure(msg);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// The synthetic-recovery fixture shared by criteria 3, 4 and 8:
// d=16, N=3, L*=4, 40 classes (30 seen / 10 unseen), 20 attributes,
// associations = indicator(sigma(v_c^T R*_j v_a) > 0.5). Unseen classes
// resemble seen ones and three attribute pairs start from coinciding
// embeddings (antonym-style), which the ablation margins rely on.
testutil::SyntheticFixture recovery_fixture(std::uint64_t seed = 11) {
  testutil::SyntheticOptions opt;
  opt.attr_perturbation = 0.15;
  opt.embedding_scale = 3.0;
  opt.unseen_affinity = 0.85;
  opt.pair_split = 1.2;
  opt.seed = seed;
  return testutil::make_synthetic(opt);
}

TrainConfig default_config() {
  TrainConfig cfg;  // epochs 200, lr 0.05, batch 64
  cfg.n_factors = 4;
  cfg.lambda = 2.0;
  cfg.seed = 1;
  return cfg;
}

FactorizedRelationModel train_on(const testutil::SyntheticFixture& fx,
                                 const RelationSchema& schema,
                                 TrainConfig cfg) {
  auto model = init_model(
      fx.class_embeddings.cols(), schema.n_relations(), cfg.n_factors,
      cfg.lambda, fx.class_embeddings, fx.attr_embeddings_perturbed, cfg.seed,
      cfg.init_scale, schema.relation_names, fx.dataset.attributes.names);
  const auto triplets =
      build_triplets(fx.dataset.assoc, schema, fx.dataset.classes);
  return train(model, triplets, cfg).first;
}

// ---------------------------------------------------------------------------

std::string criterion_gradients() {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t dims[] = {4, 16};
  const std::size_t rels[] = {1, 3};
  const std::size_t facs[] = {1, 4};
  double worst = 0.0;
  int runs = 0;
  for (std::uint64_t seed = 1; runs < 10; ++seed) {
    const std::size_t d = dims[runs % 2];
    const std::size_t n = rels[(runs / 2) % 2];
    const std::size_t l = facs[(runs / 4) % 2];
    testutil::SyntheticOptions opt;
    opt.dim = d;
    opt.n_relations = n;
    opt.n_factors = l;
    opt.n_classes = 7;
    opt.n_seen = 6;
    opt.n_attrs = 6;
    opt.lambda = 1.5;
    opt.seed = seed * 31;
    const auto fx = testutil::make_synthetic(opt);
    TrainConfig cfg;
    cfg.n_factors = l;
    cfg.lambda = 1.5;
    cfg.seed = seed;
    const auto model = testutil::init_fixture_model(fx, cfg);
    const auto data = build_triplets(fx.dataset.assoc, fx.dataset.schema,
                                     fx.dataset.classes);
    const auto check =
        testutil::finite_difference_check(model, data, runs % 3 != 2);
    worst = std::max(worst, check.max_rel_error);
    ++runs;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  require(worst <= 1e-4, "max relative error " + fmt(worst) + " > 1e-4");
  require(secs < 10.0, "runtime " + fmt(secs) + "s >= 10s");
  return "10 configs, max rel err " + fmt(worst) + ", " + fmt(secs) + "s";
}

std::string criterion_projection() {
  Rng rng(424242);
  const double lambdas[] = {0.5, 1.0, 2.0};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const double lambda = lambdas[trial % 3];
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-4.0, 4.0);
    const auto got = project_l1(v, lambda);
    const auto want = testutil::project_l1_oracle(v, lambda);
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::fabs(got[i] - want[i]));
      l1 += std::fabs(got[i]);
    }
    require(l1 <= lambda + 1e-9,
            "projected norm " + fmt(l1) + " exceeds lambda " + fmt(lambda));
  }
  require(worst <= 1e-6, "coordinate deviation " + fmt(worst) + " > 1e-6");
  return "1000 vectors, max coordinate dev " + fmt(worst);
}

std::string criterion_recovery() {
  const auto start = std::chrono::steady_clock::now();
  const auto fx = recovery_fixture();
  const auto model = train_on(fx, fx.dataset.schema, default_config());
  const double map = testutil::unseen_map(model, fx);
  const double acc = testutil::unseen_accuracy_at_05(model, fx);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  require(map >= 0.90, "unseen mAP " + fmt(map) + " < 0.90");
  require(acc >= 0.85, "unseen accuracy " + fmt(acc) + " < 0.85");
  require(secs < 60.0, "runtime " + fmt(secs) + "s >= 60s");
  return "unseen mAP " + fmt(map) + ", accuracy " + fmt(acc) + ", " +
         fmt(secs) + "s";
}

std::string criterion_ablations() {
  const auto fx = recovery_fixture();
  const auto cfg = default_config();

  const auto full = train_on(fx, fx.dataset.schema, cfg);
  const double full_map = testutil::unseen_map(full, fx);

  const auto single_schema = single_relation_schema(fx.dataset.attributes);
  const auto single = train_on(fx, single_schema, cfg);
  const double single_map =
      testutil::unseen_map(single, fx.dataset, fx.class_embeddings,
                           single_schema);

  TrainConfig frozen_cfg = cfg;
  frozen_cfg.learn_attr_embeddings = false;
  const auto frozen = train_on(fx, fx.dataset.schema, frozen_cfg);
  const double frozen_map = testutil::unseen_map(frozen, fx);

  require(full_map > single_map,
          "N=3 mAP " + fmt(full_map) + " does not beat N=1 mAP " +
              fmt(single_map));
  require(full_map > frozen_map,
          "learnable mAP " + fmt(full_map) + " does not beat frozen mAP " +
              fmt(frozen_map));
  return "full " + fmt(full_map) + " > single-relation " + fmt(single_map) +
         ", > frozen-attrs " + fmt(frozen_map);
}

std::string criterion_dap() {
  // Log-space vs direct product over every posterior bit pattern.
  const std::size_t m = 5;
  const std::vector<double> priors(m, 0.5);
  std::vector<Decision> decisions{Decision::kPositive, Decision::kPositive,
                                  Decision::kNegative, Decision::kPositive,
                                  Decision::kNegative};
  double worst = 0.0;
  for (unsigned pattern = 0; pattern < (1u << m); ++pattern) {
    std::vector<double> post(m);
    for (std::size_t i = 0; i < m; ++i)
      post[i] = (pattern >> i) & 1u ? 0.9 : 0.1;
    double direct = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (decisions[i] == Decision::kAbstain) continue;
      direct *= (decisions[i] == Decision::kPositive ? post[i]
                                                     : 1.0 - post[i]) /
                priors[i];
    }
    const double log_route = dap_score(decisions, post, priors);
    worst = std::max(worst, std::fabs(log_route - direct) / direct);
  }
  require(worst <= 1e-12, "log-space deviation " + fmt(worst) + " > 1e-12");

  // Oracle posteriors + ground-truth associations classify perfectly.
  const std::vector<std::string> classes{"z0", "z1", "z2", "z3", "z4"};
  const char* signatures[] = {"10010", "01010", "00110", "10101", "01101"};
  AssociationMatrix assoc(5, 5);
  for (std::size_t z = 0; z < 5; ++z)
    for (std::size_t a = 0; a < 5; ++a)
      assoc.at(z, a) =
          signatures[z][a] == '1' ? Assoc::kPositive : Assoc::kNegative;
  PosteriorDataset data;
  data.attribute_prior.assign(m, 0.5);
  data.posteriors = Matrix(classes.size() * 4, m);
  std::size_t row = 0;
  for (std::size_t z = 0; z < classes.size(); ++z) {
    for (int i = 0; i < 4; ++i) {
      data.image_ids.push_back("img" + std::to_string(row));
      data.true_class.push_back(classes[z]);
      for (std::size_t a = 0; a < m; ++a)
        data.posteriors(row, a) = signatures[z][a] == '1' ? 0.9 : 0.1;
      ++row;
    }
  }
  const auto predicted = classify_zsl_binary(assoc, classes, data);
  const double acc = mean_per_class_accuracy(predicted, data.true_class);
  require(acc == 1.0, "oracle ZSL accuracy " + fmt(acc) + " != 1.0");
  return "32 patterns, rel dev " + fmt(worst) + ", oracle accuracy 1.0";
}

std::string criterion_metric_oracles() {
  Rng rng(987654321);
  for (int trial = 0; trial < 100; ++trial) {
    RankedPredictions r;
    const std::size_t n = 2 + rng.below(49);
    for (std::size_t i = 0; i < n; ++i) {
      r.scores.push_back(trial % 2 == 0
                             ? 0.1 * static_cast<double>(rng.below(10))
                             : rng.uniform());
      r.labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
    }
    bool any = false;
    for (int l : r.labels) any |= l != 0;
    if (!any) r.labels[rng.below(n)] = 1;

    require(average_precision(r) == testutil::average_precision_oracle(r),
            "AP mismatch on instance " + std::to_string(trial));
    const auto got = pr_curve(r);
    const auto want = testutil::pr_curve_oracle(r);
    require(got.points.size() == want.points.size(),
            "PR point count mismatch on instance " + std::to_string(trial));
    for (std::size_t i = 0; i < got.points.size(); ++i)
      require(got.points[i].threshold == want.points[i].threshold &&
                  got.points[i].precision == want.points[i].precision &&
                  got.points[i].recall == want.points[i].recall,
              "PR point mismatch on instance " + std::to_string(trial));
  }

  // Co-occurrence score: 5/(10+10) and 40/(100+300).
  HitCountTable t;
  t.class_names = {"c1", "c2"};
  t.attribute_names = {"a1", "a2"};
  t.class_hits = {10, 100};
  t.attr_hits = {10, 300};
  t.pair_hits = Matrix(2, 2);
  t.pair_hits(0, 0) = 5;
  t.pair_hits(1, 1) = 40;
  const auto dice = baseline_dice(t);
  require(std::fabs(dice(0, 0) - 0.25) < 1e-10, "dice 0.25 example");
  require(std::fabs(dice(1, 1) - 0.1) < 1e-10, "dice 0.1 example");
  require(dice(0, 1) == 0.0, "dice zero-pair example");

  // Embedding similarity: exp(0) and exp(-1).
  Matrix vecs(3, 2);
  vecs(1, 0) = 1.0;              // b = [1, 0]
  vecs(2, 0) = 1.0;              // c = a + unit offset
  const EmbeddingTable table({"a", "b", "c"}, vecs);
  const auto sim = baseline_similarity(table, {"b"}, {"b", "a"});
  require(sim(0, 0) == 1.0, "similarity exp(0) example");
  require(std::fabs(sim(0, 1) - 0.3678794412) < 1e-10,
          "similarity exp(-1) example");

  // Weighted class combination at weights (1, 0.5).
  Matrix wvecs(3, 2);
  wvecs(1, 0) = std::log(2.0);
  const EmbeddingTable wtable({"c1", "c2", "z"}, wvecs);
  ClassScoreDataset cs;
  cs.class_names = {"c1", "c2"};
  cs.image_ids = {"i"};
  cs.true_class = {"z"};
  cs.scores = Matrix(1, 2);
  cs.scores(0, 0) = 1.0;
  require(std::fabs(baseline_weighted_classes(wtable, {"z"}, cs)(0, 0) - 1.0) <
              1e-10,
          "weighted example s=(1,0)");
  cs.scores(0, 0) = 0.0;
  cs.scores(0, 1) = 1.0;
  require(std::fabs(baseline_weighted_classes(wtable, {"z"}, cs)(0, 0) - 0.5) <
              1e-10,
          "weighted example s=(0,1)");
  cs.scores(0, 1) = 0.0;
  require(baseline_weighted_classes(wtable, {"z"}, cs)(0, 0) == 0.0,
          "weighted example all-zero scores");

  return "100 AP/PR instances exact, co-occurrence/similarity/weighted "
         "examples at printed precision";
}

std::string criterion_determinism() {
  testutil::TempDir dir;
  const std::string train_cmd =
      g_bin + " train --embeddings " + g_data + "/embeddings.txt" +
      " --associations " + g_data + "/associations.tsv --schema " + g_data +
      "/schema.tsv --unseen-file " + g_data + "/unseen.txt" +
      " --factors 4 --lambda 2 --seed 11 -o ";
  auto r1 = testutil::run_cli(train_cmd + dir.file("m1.json"));
  require(r1.exit_code == 0, "first train run failed:\n" + r1.output);
  auto r2 = testutil::run_cli(train_cmd + dir.file("m2.json"));
  require(r2.exit_code == 0, "second train run failed:\n" + r2.output);
  const auto m1 = testutil::read_file(dir.file("m1.json"));
  require(!m1.empty() && m1 == testutil::read_file(dir.file("m2.json")),
          "model files differ between identical runs");

  // Shuffling TSV rows must not change metric outputs: (a) zsl metrics under
  // shuffled posterior rows, (b) eval-assoc metrics under shuffled
  // prediction and truth rows.
  auto shuffle_rows = [](const std::string& in_path,
                         const std::string& out_path, std::uint64_t seed) {
    auto lines = read_lines(in_path);
    std::vector<std::string> rows(lines.begin() + 1, lines.end());
    rows.erase(std::remove(rows.begin(), rows.end(), std::string()),
               rows.end());
    Rng rng(seed);
    rng.shuffle(rows);
    std::ostringstream out;
    out << lines[0] << '\n';
    for (const auto& row : rows) out << row << '\n';
    testutil::write_file(out_path, out.str());
  };

  const std::string zsl_tail =
      " --embeddings " + g_data + "/embeddings.txt --schema " + g_data +
      "/schema.tsv --unseen-file " + g_data + "/unseen.txt --model " +
      dir.file("m1.json") + " --out-metrics ";
  auto z1 = testutil::run_cli(g_bin + " zsl --posteriors " + g_data +
                              "/posteriors.tsv" + zsl_tail +
                              dir.file("z1.json"));
  require(z1.exit_code == 0, "zsl run failed:\n" + z1.output);
  shuffle_rows(g_data + "/posteriors.tsv", dir.file("post_shuffled.tsv"), 5);
  auto z2 = testutil::run_cli(g_bin + " zsl --posteriors " +
                              dir.file("post_shuffled.tsv") + zsl_tail +
                              dir.file("z2.json"));
  require(z2.exit_code == 0, "shuffled zsl run failed:\n" + z2.output);
  require(testutil::read_file(dir.file("z1.json")) ==
              testutil::read_file(dir.file("z2.json")),
          "zsl metrics changed under posterior row shuffle");

  auto p = testutil::run_cli(
      g_bin + " predict --model " + dir.file("m1.json") + " --embeddings " +
      g_data + "/embeddings.txt --schema " + g_data + "/schema.tsv" +
      " --classes-file " + g_data + "/unseen.txt -o " + dir.file("pred.tsv"));
  require(p.exit_code == 0, "predict failed:\n" + p.output);

  const std::string eval_tail = " --schema " + g_data +
                                "/schema.tsv --out-metrics ";
  auto e1 = testutil::run_cli(g_bin + " eval-assoc --predictions " +
                              dir.file("pred.tsv") + " --truth " + g_data +
                              "/associations.tsv" + eval_tail +
                              dir.file("e1.json"));
  require(e1.exit_code == 0, "eval-assoc failed:\n" + e1.output);
  shuffle_rows(dir.file("pred.tsv"), dir.file("pred_shuffled.tsv"), 9);
  shuffle_rows(g_data + "/associations.tsv", dir.file("truth_shuffled.tsv"),
               13);
  auto e2 = testutil::run_cli(g_bin + " eval-assoc --predictions " +
                              dir.file("pred_shuffled.tsv") + " --truth " +
                              dir.file("truth_shuffled.tsv") + eval_tail +
                              dir.file("e2.json"));
  require(e2.exit_code == 0, "shuffled eval-assoc failed:\n" + e2.output);
  require(testutil::read_file(dir.file("e1.json")) ==
              testutil::read_file(dir.file("e2.json")),
          "eval-assoc metrics changed under row shuffles");
  return "byte-identical models; metrics invariant to TSV row order";
}

std::string criterion_transfer() {
  const auto fx1 = recovery_fixture();
  const auto cfg = default_config();

  // Single-dataset training (criterion 3's setup).
  const auto solo = train_on(fx1, fx1.dataset.schema, cfg);
  const double solo_map = testutil::unseen_map(solo, fx1);

  // A disjoint second dataset sharing the latent factors.
  testutil::SyntheticOptions opt2;
  opt2.n_classes = 20;
  opt2.n_seen = 15;
  opt2.n_attrs = 12;
  opt2.n_relations = 3;
  opt2.lambda = 2.0;
  opt2.seed = 99;
  opt2.class_prefix = "d";
  opt2.attr_prefix = "b";
  opt2.relation_names = {"s0", "s1", "s2"};
  opt2.shared_factors = &fx1.theta_true;
  const auto fx2 = testutil::make_synthetic(opt2);

  const Dataset merged = merge_datasets(fx1.dataset, fx2.dataset);
  require(merged.attributes.size() == 32, "merged attribute count");
  require(merged.schema.n_relations() == 6, "merged relation count");

  // Cross-dataset cells must stay unknown, not fabricated negatives.
  require(merged.assoc.at(0, 20) == Assoc::kUnknown,
          "cross-dataset cell not unknown");

  // Joint training over the union.
  Matrix class_emb(merged.classes.size(), 16);
  Matrix attr_emb(merged.attributes.size(), 16);
  for (std::size_t k = 0; k < 40; ++k)
    std::copy(fx1.class_embeddings.row(k).begin(),
              fx1.class_embeddings.row(k).end(), class_emb.row(k).begin());
  for (std::size_t k = 0; k < 20; ++k)
    std::copy(fx2.class_embeddings.row(k).begin(),
              fx2.class_embeddings.row(k).end(), class_emb.row(40 + k).begin());
  for (std::size_t m = 0; m < 20; ++m)
    std::copy(fx1.attr_embeddings_perturbed.row(m).begin(),
              fx1.attr_embeddings_perturbed.row(m).end(),
              attr_emb.row(m).begin());
  for (std::size_t m = 0; m < 12; ++m)
    std::copy(fx2.attr_embeddings_perturbed.row(m).begin(),
              fx2.attr_embeddings_perturbed.row(m).end(),
              attr_emb.row(20 + m).begin());

  auto joint_init = init_model(16, merged.schema.n_relations(), cfg.n_factors,
                               cfg.lambda, class_emb, attr_emb, cfg.seed,
                               cfg.init_scale, merged.schema.relation_names,
                               merged.attributes.names);
  const auto triplets =
      build_triplets(merged.assoc, merged.schema, merged.classes);
  const auto joint = train(joint_init, triplets, cfg).first;

  // A dataset-1 class predicts over the full union attribute set.
  const auto pred = predict_associations(
      joint, merged.schema, class_emb.row(30),
      merged.classes.names[30], ThresholdPair{0.5, 0.5});
  require(pred.probabilities.size() == 32,
          "prediction does not cover the union attribute set");
  for (double p : pred.probabilities)
    require(p > 0.0 && p < 1.0, "prediction probability out of range");

  // mAP on dataset-1 attributes within 0.05 of single-dataset training.
  std::vector<std::size_t> ds1_attrs(20);
  for (std::size_t m = 0; m < 20; ++m) ds1_attrs[m] = m;
  Dataset merged_ds1_unseen = merged;
  // Restrict the unseen set to dataset-1 classes (dataset-2 unseen classes
  // are not part of this comparison).
  for (std::size_t k = 40; k < merged.classes.size(); ++k)
    merged_ds1_unseen.classes.seen[k] = true;
  const double joint_map =
      testutil::unseen_map(joint, merged_ds1_unseen, class_emb, merged.schema,
                           &ds1_attrs);
  require(std::fabs(joint_map - solo_map) <= 0.05,
          "joint mAP " + fmt(joint_map) + " vs solo " + fmt(solo_map) +
              " differ by more than 0.05");
  return "solo mAP " + fmt(solo_map) + ", joint mAP " + fmt(joint_map) +
         " (|diff| <= 0.05), union predictions clean";
}

std::string criterion_end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  testutil::TempDir dir;
  const std::string common =
      " --embeddings " + g_data + "/embeddings.txt";

  auto run_step = [&](const std::string& step, const std::string& cmd) {
    const auto r = testutil::run_cli(cmd);
    require(r.exit_code == 0, step + " exited " + std::to_string(r.exit_code) +
                                  ":\n" + r.output);
  };

  run_step("cluster-relations",
           g_bin + " cluster-relations" + common + " --associations " +
               g_data + "/associations.tsv --n-clusters 3 -o " +
               dir.file("dr.tsv"));

  const std::string data_args = common + " --associations " + g_data +
                                "/associations.tsv --schema " +
                                dir.file("dr.tsv") + " --unseen-file " +
                                g_data + "/unseen.txt";
  run_step("train", g_bin + " train" + data_args +
                        " --factors 4 --lambda 2 --seed 5 -o " +
                        dir.file("model.json") + " --report-out " +
                        dir.file("report.json"));

  run_step("calibrate", g_bin + " calibrate" + data_args + " --posteriors " +
                            g_data + "/posteriors.tsv" +
                            " --factors 4 --lambda 2 --seed 5 -o " +
                            dir.file("thresholds.json"));

  run_step("predict", g_bin + " predict --model " + dir.file("model.json") +
                          common + " --schema " + dir.file("dr.tsv") +
                          " --classes-file " + g_data + "/unseen.txt" +
                          " --thresholds-file " + dir.file("thresholds.json") +
                          " -o " + dir.file("pred.tsv"));

  run_step("zsl", g_bin + " zsl --model " + dir.file("model.json") + common +
                      " --schema " + dir.file("dr.tsv") + " --posteriors " +
                      g_data + "/posteriors.tsv --unseen-file " + g_data +
                      "/unseen.txt --thresholds-file " +
                      dir.file("thresholds.json") + " --out-predictions " +
                      dir.file("zsl.tsv") + " --out-metrics " +
                      dir.file("zsl_metrics.json"));

  std::filesystem::create_directory(dir.path() / "pr");
  run_step("eval-assoc", g_bin + " eval-assoc --predictions " +
                             dir.file("pred.tsv") + " --truth " + g_data +
                             "/associations.tsv --schema " + dir.file("dr.tsv") +
                             " --out-metrics " + dir.file("assoc_metrics.json") +
                             " --pr-dir " + dir.file("pr"));

  // N relations -> N PR files.
  std::size_t pr_files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path() / "pr"))
    if (e.path().extension() == ".tsv") ++pr_files;
  require(pr_files == 3, "expected 3 PR files, found " +
                             std::to_string(pr_files));

  const auto zsl_metrics =
      json::parse(testutil::read_file(dir.file("zsl_metrics.json")));
  for (const char* key : {"mean_per_class_accuracy", "per_class_accuracy",
                          "n_images", "n_classes"})
    require(zsl_metrics.contains(key),
            std::string("zsl metrics missing key ") + key);

  const auto assoc_metrics =
      json::parse(testutil::read_file(dir.file("assoc_metrics.json")));
  for (const char* key : {"mean_ap", "accuracy", "per_relation_ap"})
    require(assoc_metrics.contains(key),
            std::string("assoc metrics missing key ") + key);

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  require(secs < 120.0, "pipeline took " + fmt(secs) + "s >= 120s");

  return "pipeline clean in " + fmt(secs) + "s; mAP " +
         fmt(assoc_metrics["mean_ap"].get<double>()) + ", ZSL accuracy " +
         fmt(zsl_metrics["mean_per_class_accuracy"].get<double>());
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--bin") g_bin = argv[i + 1];
    if (flag == "--data") g_data = argv[i + 1];
  }
  if (g_bin.empty() || g_data.empty()) {
    std::cerr << "usage: acceptance_tests --bin <attrel binary> --data "
                 "<toy dataset dir>\n";
    return 2;
  }

  const std::vector<std::pair<std::string, std::function<std::string()>>>
      criteria = {
          {"gradient-correctness", criterion_gradients},
          {"l1-projection", criterion_projection},
          {"synthetic-recovery", criterion_recovery},
          {"ablation-ordering", criterion_ablations},
          {"dap-oracle", criterion_dap},
          {"metric-oracles", criterion_metric_oracles},
          {"determinism", criterion_determinism},
          {"transfer-mechanics", criterion_transfer},
          {"end-to-end-smoke", criterion_end_to_end},
      };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& [name, fn] = criteria[i];
    try {
      const std::string detail = fn();
      std::printf("[%zu/9] PASS %-22s %s\n", i + 1, name.c_str(),
                  detail.c_str());
    } catch (const std::exception& e) {
      std::printf("[%zu/9] FAIL %-22s %s\n", i + 1, name.c_str(), e.what());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
