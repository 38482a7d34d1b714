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

// attrel: learn bilinear class-attribute relations over word embeddings,
// predict associations for unseen classes, and run zero-shot classification
// plus the co-occurrence / embedding-space baselines.
//
// Exit codes: 0 success, 1 computation failure, 2 bad input or usage.

#include <algorithm>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "attrel/association_predictor.hpp"
#include "attrel/embedding_store.hpp"
#include "attrel/errors.hpp"
#include "attrel/eval_metrics.hpp"
#include "attrel/factor_model.hpp"
#include "attrel/io.hpp"
#include "attrel/relation_schema.hpp"
#include "attrel/zsl_engine.hpp"

namespace {

using namespace attrel;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Shared option bundles

struct DataOptions {
  std::string embeddings_path;
  std::vector<std::string> association_paths;
  std::vector<std::string> dataset_names;
  std::vector<std::string> schema_paths;
  bool data_driven = false;
  std::size_t n_clusters = 10;
  bool single_relation = false;
  std::vector<std::string> unseen;
  std::string unseen_file;
};

struct TrainOptions {
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  double lambda = 1.0;
  std::size_t n_factors = 4;
  double init_scale = 0.1;
  bool fixed_attr_embeddings = false;
  std::string optimizer = "sgd";
};

struct ThresholdOptions {
  double t_minus = 0.5;
  double t_plus = 0.5;
  std::string thresholds_file;
};

void add_data_options(CLI::App* cmd, DataOptions& opt, bool need_assoc) {
  cmd->add_option("--embeddings", opt.embeddings_path,
                  "word embedding text file")
      ->required();
  auto* assoc = cmd->add_option("--associations", opt.association_paths,
                                "association TSV (repeatable for joint "
                                "training across datasets)");
  if (need_assoc) assoc->required();
  cmd->add_option("--dataset-name", opt.dataset_names,
                  "name per --associations file (namespaces colliding "
                  "relation names)");
  cmd->add_option("--schema", opt.schema_paths,
                  "semantic relation schema TSV, one per dataset");
  cmd->add_flag("--data-driven", opt.data_driven,
                "discover relations by clustering attribute embeddings");
  cmd->add_option("--n-clusters", opt.n_clusters,
                  "cluster count for --data-driven (default 10)");
  cmd->add_flag("--single-relation", opt.single_relation,
                "group all attributes under one abstract relation");
  cmd->add_option("--unseen", opt.unseen, "unseen class names");
  cmd->add_option("--unseen-file", opt.unseen_file,
                  "file with one unseen class name per line");
}

void add_train_options(CLI::App* cmd, TrainOptions& opt) {
  cmd->add_option("--epochs", opt.epochs, "training epochs (default 200)");
  cmd->add_option("--learning-rate", opt.learning_rate,
                  "SGD step size (default 0.05)");
  cmd->add_option("--batch-size", opt.batch_size, "mini-batch size (default 64)");
  cmd->add_option("--seed", opt.seed, "RNG seed (default 1)");
  cmd->add_option("--lambda", opt.lambda,
                  "L1 budget for the factor mixing weights (default 1)");
  cmd->add_option("--factors", opt.n_factors,
                  "number of latent factors L (default 4)");
  cmd->add_option("--init-scale", opt.init_scale,
                  "uniform init range for factors (default 0.1)");
  cmd->add_flag("--fixed-attr-embeddings", opt.fixed_attr_embeddings,
                "freeze attribute embeddings during training");
  cmd->add_option("--optimizer", opt.optimizer, "sgd | momentum")
      ->check(CLI::IsMember({"sgd", "momentum"}));
}

void add_threshold_options(CLI::App* cmd, ThresholdOptions& opt) {
  cmd->add_option("--t-minus", opt.t_minus,
                  "negative-decision threshold (default 0.5)");
  cmd->add_option("--t-plus", opt.t_plus,
                  "positive-decision threshold (default 0.5)");
  cmd->add_option("--thresholds-file", opt.thresholds_file,
                  "JSON written by `attrel calibrate`; overrides --t-minus/"
                  "--t-plus");
}

TrainConfig to_train_config(const TrainOptions& opt) {
  TrainConfig cfg;
  cfg.epochs = opt.epochs;
  cfg.learning_rate = opt.learning_rate;
  cfg.batch_size = opt.batch_size;
  cfg.seed = opt.seed;
  cfg.lambda = opt.lambda;
  cfg.n_factors = opt.n_factors;
  cfg.init_scale = opt.init_scale;
  cfg.learn_attr_embeddings = !opt.fixed_attr_embeddings;
  cfg.optimizer =
      opt.optimizer == "momentum" ? Optimizer::kSgdMomentum : Optimizer::kSgd;
  return cfg;
}

ThresholdPair to_thresholds(const ThresholdOptions& opt) {
  ThresholdPair t{opt.t_minus, opt.t_plus};
  if (!opt.thresholds_file.empty()) {
    const auto text = read_lines(opt.thresholds_file);
    std::string joined;
    for (const auto& line : text) joined += line + "\n";
    json j;
    try {
      j = json::parse(joined);
    } catch (const json::exception& e) {
      throw InputError("thresholds file " + opt.thresholds_file + ": " +
                       e.what());
    }
    if (!j.contains("t_minus") || !j.contains("t_plus"))
      throw InputError("thresholds file " + opt.thresholds_file +
                       ": needs t_minus and t_plus");
    t.t_minus = j["t_minus"].get<double>();
    t.t_plus = j["t_plus"].get<double>();
  }
  if (t.t_minus > t.t_plus)
    throw InputError("t_minus must be <= t_plus");
  return t;
}

std::vector<std::string> read_name_list(const std::string& path) {
  std::vector<std::string> names;
  for (const auto& line : read_lines(path))
    if (!line.empty()) names.push_back(line);
  return names;
}

std::vector<std::string> unseen_names(const DataOptions& opt) {
  std::vector<std::string> names = opt.unseen;
  if (!opt.unseen_file.empty()) {
    const auto more = read_name_list(opt.unseen_file);
    names.insert(names.end(), more.begin(), more.end());
  }
  return names;
}

// Load all association files, attach schemas, merge, and apply the seen/
// unseen split.
Dataset assemble_dataset(const DataOptions& opt, const EmbeddingTable& table) {
  if (opt.association_paths.empty())
    throw InputError("need at least one --associations file");
  if (!opt.schema_paths.empty() &&
      opt.schema_paths.size() != opt.association_paths.size())
    throw InputError("--schema must be given once per --associations file");

  std::vector<Dataset> sources;
  for (std::size_t i = 0; i < opt.association_paths.size(); ++i) {
    const std::string name = i < opt.dataset_names.size()
                                 ? opt.dataset_names[i]
                                 : "ds" + std::to_string(i);
    Dataset ds = load_association_file(opt.association_paths[i], name);
    if (!opt.schema_paths.empty())
      ds.schema = load_semantic_schema(opt.schema_paths[i], ds.attributes);
    sources.push_back(std::move(ds));
  }

  Dataset merged = std::move(sources[0]);
  for (std::size_t i = 1; i < sources.size(); ++i)
    merged = merge_datasets(merged, sources[i]);

  if (opt.single_relation) {
    merged.schema = single_relation_schema(merged.attributes);
  } else if (opt.data_driven) {
    merged.schema =
        discover_relations(table, merged.attributes, opt.n_clusters);
  } else if (opt.schema_paths.empty()) {
    throw InputError(
        "relations undefined: pass --schema, --data-driven or "
        "--single-relation");
  }

  for (const auto& name : unseen_names(opt)) {
    bool found = false;
    for (std::size_t k = 0; k < merged.classes.size(); ++k) {
      if (merged.classes.names[k] == name) {
        merged.classes.seen[k] = false;
        found = true;
      }
    }
    if (!found)
      std::cerr << "note: unseen class '" << name
                << "' has no association row (open-set prediction only)\n";
  }
  return merged;
}

Matrix embed_names(const EmbeddingTable& table,
                   const std::vector<std::string>& names) {
  Matrix out(names.size(), table.dim());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto pv = embed_phrase(table, names[i]);
    std::copy(pv.vector.begin(), pv.vector.end(), out.row(i).begin());
  }
  return out;
}

// Schema loaded at inference time, remapped onto the model's attribute and
// relation order by name.
RelationSchema schema_for_model(const std::string& schema_path,
                                const FactorizedRelationModel& model) {
  AttributeVocabulary attrs;
  attrs.names = model.attribute_names;
  RelationSchema schema = load_semantic_schema(schema_path, attrs);
  // Remap relation indices to the model's relation_names.
  std::unordered_map<std::string, std::size_t> model_rel;
  for (std::size_t j = 0; j < model.relation_names.size(); ++j)
    model_rel.emplace(model.relation_names[j], j);
  RelationSchema out;
  out.relation_names = model.relation_names;
  out.assignment.resize(schema.assignment.size());
  for (std::size_t m = 0; m < schema.assignment.size(); ++m) {
    const auto& rel = schema.relation_names[schema.assignment[m]];
    const auto it = model_rel.find(rel);
    if (it == model_rel.end())
      throw InputError("schema relation '" + rel +
                       "' does not exist in the model");
    out.assignment[m] = it->second;
  }
  return out;
}

void write_json(const std::string& path, const json& j) {
  atomic_write_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// train

struct TrainCmd {
  DataOptions data;
  TrainOptions train_opt;
  std::string model_out;
  std::string report_out;
  std::vector<std::size_t> search_factors;
  std::vector<double> search_lambda;
  std::size_t search_folds = 5;

  void run() const {
    const auto table = load_embeddings(data.embeddings_path);
    const Dataset ds = assemble_dataset(data, table);
    if (ds.classes.seen_count() == 0)
      throw InputError("no seen classes left for training");

    TrainConfig cfg = to_train_config(train_opt);
    json report;
    report["seed"] = cfg.seed;
    report["epochs"] = cfg.epochs;
    report["learning_rate"] = cfg.learning_rate;
    report["batch_size"] = cfg.batch_size;

    if (!search_factors.empty() || !search_lambda.empty()) {
      std::vector<std::size_t> Ls = search_factors;
      if (Ls.empty()) Ls = {cfg.n_factors};
      std::vector<double> lambdas = search_lambda;
      if (lambdas.empty()) lambdas = {cfg.lambda};
      const auto choice = select_hyperparameters(Ls, lambdas, ds, table, cfg,
                                                 search_folds);
      cfg.n_factors = choice.n_factors;
      cfg.lambda = choice.lambda;
      report["selected_factors"] = choice.n_factors;
      report["selected_lambda"] = choice.lambda;
      report["search_validation_map"] = choice.mean_validation_map;
      std::cout << "selected L=" << choice.n_factors
                << " lambda=" << choice.lambda
                << " (validation mAP=" << choice.mean_validation_map << ")\n";
    }
    report["n_factors"] = cfg.n_factors;
    report["lambda"] = cfg.lambda;

    const Matrix class_emb = embed_names(table, ds.classes.names);
    const Matrix attr_emb = embed_names(table, ds.attributes.names);
    auto model = init_model(table.dim(), ds.schema.n_relations(),
                            cfg.n_factors, cfg.lambda, class_emb, attr_emb,
                            cfg.seed, cfg.init_scale, ds.schema.relation_names,
                            ds.attributes.names);
    const auto triplets = build_triplets(ds.assoc, ds.schema, ds.classes);
    if (triplets.size() == 0)
      throw InputError("no training triplets (all cells unknown?)");

    auto [trained, train_report] = train(model, triplets, cfg);
    save_model(trained, model_out);

    report["n_positives"] = triplets.positives.size();
    report["n_negatives"] = triplets.negatives.size();
    report["epoch_mean_loss"] = train_report.epoch_mean_loss;
    report["final_loss"] = train_report.final_loss;
    report["wall_seconds"] = train_report.wall_seconds;
    const std::string rpath =
        report_out.empty() ? model_out + ".report.json" : report_out;
    write_json(rpath, report);
    std::cout << "model written to " << model_out << " (final mean loss "
              << train_report.final_loss << ")\n";
  }
};

// ---------------------------------------------------------------------------
// predict

struct PredictCmd {
  std::string model_path;
  std::string embeddings_path;
  std::string schema_path;
  std::vector<std::string> class_names;
  std::string classes_file;
  ThresholdOptions thresholds;
  std::string out_path;

  void run() const {
    const auto model = load_model(model_path);
    const auto table = load_embeddings(embeddings_path);
    const auto schema = schema_for_model(schema_path, model);
    const auto pair = to_thresholds(thresholds);

    std::vector<std::string> names = class_names;
    if (!classes_file.empty()) {
      const auto more = read_name_list(classes_file);
      names.insert(names.end(), more.begin(), more.end());
    }
    if (names.empty()) throw InputError("no classes given (--class/--classes-file)");

    std::vector<AssociationPrediction> preds;
    for (const auto& name : names) {
      const auto pv = embed_phrase(table, name);
      preds.push_back(
          predict_associations(model, schema, pv.vector, name, pair));
    }
    AttributeVocabulary attrs;
    attrs.names = model.attribute_names;
    atomic_write_file(out_path, predictions_tsv(preds, attrs));
    std::cout << "wrote " << names.size() * attrs.size() << " predictions to "
              << out_path << "\n";
  }
};

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateCmd {
  DataOptions data;
  TrainOptions train_opt;
  std::string posteriors_path;
  double attr_prior = 0.5;
  std::size_t k_holdout = 0;
  std::size_t folds = 5;
  double grid_step = 0.05;
  std::string out_path;

  void run() const {
    const auto table = load_embeddings(data.embeddings_path);
    const Dataset ds = assemble_dataset(data, table);
    const auto posteriors =
        load_posterior_file(posteriors_path, ds.attributes, attr_prior);

    CalibrationConfig cal;
    cal.k_holdout = k_holdout;
    cal.folds = folds;
    cal.grid_step = grid_step;
    const auto result = calibrate_thresholds(ds, table, posteriors,
                                             to_train_config(train_opt), cal);

    json j;
    j["t_minus"] = result.thresholds.t_minus;
    j["t_plus"] = result.thresholds.t_plus;
    j["mean_holdout_accuracy"] = result.mean_holdout_accuracy;
    j["k_holdout"] = cal.k_holdout;
    j["folds"] = cal.folds;
    j["grid_step"] = cal.grid_step;
    j["seed"] = train_opt.seed;
    write_json(out_path, j);
    std::cout << "thresholds t-=" << result.thresholds.t_minus
              << " t+=" << result.thresholds.t_plus << " (held-out accuracy "
              << result.mean_holdout_accuracy << ") written to " << out_path
              << "\n";
  }
};

// ---------------------------------------------------------------------------
// zsl

struct ZslCmd {
  std::string baseline = "dap";
  std::string model_path;
  std::string embeddings_path;
  std::string schema_path;
  std::string posteriors_path;
  std::string class_scores_path;
  std::string hit_counts_path;
  DataOptions data;  // associations etc. for baseline calibration
  ThresholdOptions thresholds;
  double attr_prior = 0.5;
  std::string assoc_strategy = "best-threshold";
  std::size_t top_q_override = 0;
  std::string out_predictions;
  std::string out_metrics;

  // Truth + seen/unseen split for baseline calibration. Only loaded when a
  // baseline needs it.
  Dataset calibration_dataset(const EmbeddingTable* table) const {
    DataOptions opts = data;
    opts.single_relation = true;  // baselines ignore relations
    if (table) return assemble_dataset(opts, *table);
    if (opts.association_paths.empty())
      throw InputError("this baseline needs --associations for calibration");
    Dataset ds =
        load_association_file(opts.association_paths[0], "calibration");
    for (const auto& name : unseen_names(opts)) {
      for (std::size_t k = 0; k < ds.classes.size(); ++k)
        if (ds.classes.names[k] == name) ds.classes.seen[k] = false;
    }
    return ds;
  }

  static std::vector<std::size_t> seen_rows(const Dataset& cal) {
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < cal.classes.size(); ++k)
      if (cal.classes.seen[k]) rows.push_back(k);
    return rows;
  }

  // Seen-class truth packed into the row order of the seen-score matrix.
  static AssociationMatrix seen_truth_rows(const Dataset& cal) {
    const auto rows = seen_rows(cal);
    AssociationMatrix out(rows.size(), cal.attributes.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t m = 0; m < cal.attributes.size(); ++m)
        out.at(r, m) = cal.assoc.at(rows[r], m);
    return out;
  }

  AssociationMatrix binarize(const Matrix& unseen_scores,
                             const Matrix& seen_scores,
                             const Dataset& cal, bool force_top_q) const {
    if (force_top_q || assoc_strategy == "top-q") {
      const std::size_t q =
          top_q_override ? top_q_override
                         : average_positive_count(cal.assoc, cal.classes);
      return top_q_associations(unseen_scores, q);
    }
    if (assoc_strategy == "best-threshold") {
      const double t = best_threshold(seen_scores, seen_truth_rows(cal));
      return threshold_associations(unseen_scores, t);
    }
    throw InputError("unknown --assoc-strategy: " + assoc_strategy);
  }

  void run() const {
    std::vector<std::string> predicted;
    std::vector<std::string> truth;
    std::vector<std::string> image_ids;

    if (baseline == "nearest-class" || baseline == "weighted-classes") {
      if (class_scores_path.empty())
        throw InputError("this baseline needs --class-scores");
      const auto table = load_embeddings(embeddings_path);
      const auto scores = load_class_score_file(class_scores_path);
      const auto unseen = unseen_list();
      predicted = baseline == "nearest-class"
                      ? baseline_nearest_class(table, unseen, scores)
                      : classify_from_scores(
                            baseline_weighted_classes(table, unseen, scores),
                            unseen);
      truth = scores.true_class;
      image_ids = scores.image_ids;
    } else {
      // Attribute-based routes all classify via DAP over the posteriors.
      if (posteriors_path.empty()) throw InputError("--posteriors is required");
      const auto unseen = unseen_list();

      if (baseline == "dap") {
        if (model_path.empty()) throw InputError("--model is required");
        const auto model = load_model(model_path);
        const auto table = load_embeddings(embeddings_path);
        const auto schema = schema_for_model(schema_path, model);
        AttributeVocabulary attrs;
        attrs.names = model.attribute_names;
        const auto posteriors =
            load_posterior_file(posteriors_path, attrs, attr_prior);
        const auto pair = to_thresholds(thresholds);
        std::vector<AssociationPrediction> preds;
        for (const auto& name : unseen) {
          const auto pv = embed_phrase(table, name);
          preds.push_back(
              predict_associations(model, schema, pv.vector, name, pair));
        }
        predicted = classify_zsl(preds, posteriors);
        truth = posteriors.true_class;
        image_ids = posteriors.image_ids;
      } else if (baseline == "dice" || baseline == "similarity" ||
                 baseline == "top-q") {
        Dataset cal;
        Matrix unseen_scores, seen_scores;
        if (baseline == "dice") {
          if (hit_counts_path.empty())
            throw InputError("--hit-counts is required for the dice baseline");
          cal = calibration_dataset(nullptr);
          const auto hits = load_hit_count_file(hit_counts_path);
          const auto all = baseline_dice(hits);
          std::vector<std::string> seen_names;
          for (std::size_t k : seen_rows(cal))
            seen_names.push_back(cal.classes.names[k]);
          unseen_scores =
              select_hit_scores(all, hits, unseen, cal.attributes.names);
          seen_scores =
              select_hit_scores(all, hits, seen_names, cal.attributes.names);
        } else {
          const auto table = load_embeddings(embeddings_path);
          cal = calibration_dataset(&table);
          std::vector<std::string> seen_names;
          for (std::size_t k : seen_rows(cal))
            seen_names.push_back(cal.classes.names[k]);
          unseen_scores =
              baseline_similarity(table, unseen, cal.attributes.names);
          seen_scores =
              baseline_similarity(table, seen_names, cal.attributes.names);
        }
        const AssociationMatrix assoc = binarize(
            unseen_scores, seen_scores, cal, /*force_top_q=*/baseline == "top-q");
        const auto posteriors =
            load_posterior_file(posteriors_path, cal.attributes, attr_prior);
        predicted = classify_zsl_binary(assoc, unseen, posteriors);
        truth = posteriors.true_class;
        image_ids = posteriors.image_ids;
      } else {
        throw InputError("unknown --baseline: " + baseline);
      }
    }

    // Keep only images whose true class is a ZSL candidate.
    std::vector<std::string> kept_pred, kept_truth;
    const auto unseen = unseen_list();
    const std::set<std::string> unseen_set(unseen.begin(), unseen.end());
    std::ostringstream tsv;
    tsv << "image_id\ttrue_class\tpredicted_class\n";
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      if (!unseen_set.count(truth[i])) continue;
      kept_pred.push_back(predicted[i]);
      kept_truth.push_back(truth[i]);
      tsv << image_ids[i] << '\t' << truth[i] << '\t' << predicted[i] << '\n';
    }
    if (kept_truth.empty())
      throw InputError("no posterior images belong to the unseen classes");

    const auto per_class = per_class_accuracy(kept_pred, kept_truth);
    json metrics;
    metrics["mean_per_class_accuracy"] =
        mean_per_class_accuracy(kept_pred, kept_truth);
    json breakdown;
    for (const auto& [name, acc] : per_class) breakdown[name] = acc;
    metrics["per_class_accuracy"] = breakdown;
    metrics["n_images"] = kept_truth.size();
    metrics["n_classes"] = per_class.size();
    metrics["baseline"] = baseline;

    if (!out_predictions.empty()) atomic_write_file(out_predictions, tsv.str());
    write_json(out_metrics, metrics);
    std::cout << "mean per-class accuracy "
              << metrics["mean_per_class_accuracy"].get<double>() << " over "
              << per_class.size() << " classes\n";
  }

  std::vector<std::string> unseen_list() const {
    auto names = unseen_names(data);
    if (names.empty())
      throw InputError("zsl needs --unseen/--unseen-file class names");
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
  }
};

// ---------------------------------------------------------------------------
// eval-assoc

struct EvalAssocCmd {
  std::string predictions_path;
  std::string truth_path;
  std::string schema_path;
  std::string out_metrics;
  std::string pr_dir;

  // Space and underscore forms of a name ("humpback whale" vs
  // "humpback_whale") refer to the same entity.
  static std::string canonical(const std::string& name) {
    std::string out = name;
    for (char& c : out)
      if (c == ' ') c = '_';
    return out;
  }

  void run() const {
    const Dataset truth = load_association_file(truth_path, "truth");
    const RelationSchema schema =
        schema_path.empty() ? single_relation_schema(truth.attributes)
                            : load_semantic_schema(schema_path, truth.attributes);

    std::unordered_map<std::string, std::size_t> class_index, attr_index;
    for (std::size_t k = 0; k < truth.classes.size(); ++k)
      class_index.emplace(canonical(truth.classes.names[k]), k);
    for (std::size_t m = 0; m < truth.attributes.size(); ++m)
      attr_index.emplace(canonical(truth.attributes.names[m]), m);
    auto lookup = [&](const std::unordered_map<std::string, std::size_t>& idx,
                      const std::string& name, const char* what) {
      const auto it = idx.find(canonical(name));
      if (it == idx.end())
        throw InputError(std::string("unknown ") + what + " in predictions: '" +
                         name + "'");
      return it->second;
    };

    // Parse predictions: class -> (probability, decision) per attribute.
    struct Cell {
      double p = 0.0;
      Decision d = Decision::kAbstain;
      bool present = false;
    };
    std::map<std::string, std::vector<Cell>> by_class;
    const auto lines = read_lines(predictions_path);
    if (lines.empty()) throw InputError(predictions_path + ": empty file");
    std::size_t start = 0;
    if (!lines.empty() && lines[0].rfind("class\t", 0) == 0) start = 1;
    for (std::size_t li = start; li < lines.size(); ++li) {
      if (lines[li].empty()) continue;
      const auto fields = split_tabs(lines[li]);
      if (fields.size() != 4)
        throw InputError(predictions_path + ":" + std::to_string(li + 1) +
                         ": expected class/attribute/probability/decision");
      const std::string cls = canonical(fields[0]);
      const std::size_t m = lookup(attr_index, fields[1], "attribute");
      auto& row = by_class[cls];
      row.resize(truth.attributes.size());
      if (row[m].present)
        throw InputError(predictions_path + ":" + std::to_string(li + 1) +
                         ": duplicate (class, attribute) pair");
      row[m].p = parse_double(fields[2],
                              predictions_path + ":" + std::to_string(li + 1));
      row[m].d = fields[3] == "+"   ? Decision::kPositive
                 : fields[3] == "-" ? Decision::kNegative
                                    : Decision::kAbstain;
      row[m].present = true;
    }

    // Per-class AP over known truth cells; accuracy over decided cells;
    // pooled per-relation rankings. Classes iterate in sorted name order so
    // input row order cannot matter.
    std::vector<RankedPredictions> per_class;
    std::size_t known = 0, matched = 0;
    std::vector<RankedPredictions> per_relation(schema.n_relations());
    std::size_t evaluated_classes = 0;

    for (const auto& [cls, row] : by_class) {
      const std::size_t k = lookup(class_index, cls, "class");
      RankedPredictions rp;
      for (std::size_t m = 0; m < truth.attributes.size(); ++m) {
        if (!row[m].present)
          throw InputError("predictions missing attribute '" +
                           truth.attributes.names[m] + "' for class '" + cls +
                           "'");
        const Assoc cell = truth.assoc.at(k, m);
        if (cell == Assoc::kUnknown) continue;
        const int label = cell == Assoc::kPositive ? 1 : 0;
        rp.scores.push_back(row[m].p);
        rp.labels.push_back(label);
        per_relation[schema.assignment[m]].scores.push_back(row[m].p);
        per_relation[schema.assignment[m]].labels.push_back(label);
        ++known;
        if ((row[m].d == Decision::kPositive && label == 1) ||
            (row[m].d == Decision::kNegative && label == 0))
          ++matched;
      }
      if (!rp.scores.empty()) {
        const bool has_pos = std::any_of(rp.labels.begin(), rp.labels.end(),
                                         [](int l) { return l != 0; });
        if (has_pos) {
          per_class.push_back(std::move(rp));
          ++evaluated_classes;
        } else {
          std::cerr << "eval-assoc: class '" << cls
                    << "' has no positive attributes; excluded from mAP\n";
        }
      }
    }
    if (per_class.empty())
      throw InputError("no evaluable classes in the predictions");

    json metrics;
    metrics["mean_ap"] = mean_ap(per_class);
    metrics["accuracy"] =
        known ? static_cast<double>(matched) / static_cast<double>(known) : 0.0;
    metrics["n_classes"] = evaluated_classes;
    metrics["n_known_cells"] = known;

    json rel_ap;
    for (std::size_t j = 0; j < schema.n_relations(); ++j) {
      if (per_relation[j].scores.empty()) continue;
      const bool has_pos =
          std::any_of(per_relation[j].labels.begin(),
                      per_relation[j].labels.end(),
                      [](int l) { return l != 0; });
      if (!has_pos) continue;
      const auto curve = pr_curve(per_relation[j]);
      rel_ap[schema.relation_names[j]] = curve.ap;
      if (!pr_dir.empty()) {
        const std::string path = pr_dir + "/pr_" +
                                 sanitize_filename(schema.relation_names[j]) +
                                 ".tsv";
        atomic_write_file(path, pr_curve_tsv(curve));
      }
    }
    metrics["per_relation_ap"] = rel_ap;
    write_json(out_metrics, metrics);
    std::cout << "mAP " << metrics["mean_ap"].get<double>() << ", accuracy "
              << metrics["accuracy"].get<double>() << " over "
              << evaluated_classes << " classes\n";
  }
};

// ---------------------------------------------------------------------------
// cluster-relations

struct ClusterCmd {
  std::string embeddings_path;
  std::string associations_path;
  std::string attributes_file;
  std::size_t n_clusters = 10;
  std::string out_path;

  void run() const {
    const auto table = load_embeddings(embeddings_path);
    AttributeVocabulary attrs;
    if (!attributes_file.empty()) {
      attrs.names = read_name_list(attributes_file);
    } else if (!associations_path.empty()) {
      attrs = load_association_file(associations_path, "x").attributes;
    } else {
      throw InputError("need --associations or --attributes-file");
    }
    attrs.validate();
    const auto schema = discover_relations(table, attrs, n_clusters);
    save_schema(schema, attrs, out_path);
    std::cout << "wrote " << schema.n_relations() << " relations to "
              << out_path << "\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "attrel: class-attribute relation learning for zero-shot "
      "classification"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file (flags override)");

  TrainCmd train_cmd;
  auto* train_app = app.add_subcommand(
      "train", "learn the factorized relation tensor from associations");
  add_data_options(train_app, train_cmd.data, true);
  add_train_options(train_app, train_cmd.train_opt);
  train_app->add_option("-o,--model-out", train_cmd.model_out, "model JSON")
      ->required();
  train_app->add_option("--report-out", train_cmd.report_out,
                        "training report JSON (default <model>.report.json)");
  train_app->add_option("--search-factors", train_cmd.search_factors,
                        "candidate L values for cross-validated selection");
  train_app->add_option("--search-lambda", train_cmd.search_lambda,
                        "candidate lambda values");
  train_app->add_option("--search-folds", train_cmd.search_folds,
                        "folds for the hyperparameter search (default 5)");

  PredictCmd predict_cmd;
  auto* predict_app = app.add_subcommand(
      "predict", "predict binary associations for named classes");
  predict_app->add_option("--model", predict_cmd.model_path)->required();
  predict_app->add_option("--embeddings", predict_cmd.embeddings_path)
      ->required();
  predict_app->add_option("--schema", predict_cmd.schema_path,
                          "relation schema used at training time")
      ->required();
  predict_app->add_option("--class", predict_cmd.class_names,
                          "class name (repeatable; quotes for multi-word)");
  predict_app->add_option("--classes-file", predict_cmd.classes_file);
  add_threshold_options(predict_app, predict_cmd.thresholds);
  predict_app->add_option("-o,--out", predict_cmd.out_path)->required();

  CalibrateCmd calibrate_cmd;
  auto* calibrate_app = app.add_subcommand(
      "calibrate",
      "leave-K-class-out search for the decision thresholds (t-, t+)");
  add_data_options(calibrate_app, calibrate_cmd.data, true);
  add_train_options(calibrate_app, calibrate_cmd.train_opt);
  calibrate_app->add_option("--posteriors", calibrate_cmd.posteriors_path)
      ->required();
  calibrate_app->add_option("--attr-prior", calibrate_cmd.attr_prior,
                            "identical attribute prior (default 0.5)");
  calibrate_app->add_option("--k-holdout", calibrate_cmd.k_holdout,
                            "held-out classes per fold (default 20%)");
  calibrate_app->add_option("--folds", calibrate_cmd.folds);
  calibrate_app->add_option("--grid-step", calibrate_cmd.grid_step);
  calibrate_app->add_option("-o,--out", calibrate_cmd.out_path)->required();

  ZslCmd zsl_cmd;
  auto* zsl_app = app.add_subcommand(
      "zsl", "zero-shot classification of unseen-class images");
  zsl_app->add_option("--baseline", zsl_cmd.baseline,
                      "dap (model) | dice | similarity | top-q | "
                      "nearest-class | weighted-classes")
      ->check(CLI::IsMember({"dap", "dice", "similarity", "top-q",
                             "nearest-class", "weighted-classes"}));
  zsl_app->add_option("--model", zsl_cmd.model_path);
  zsl_app->add_option("--embeddings", zsl_cmd.embeddings_path);
  zsl_app->add_option("--schema", zsl_cmd.schema_path);
  zsl_app->add_option("--posteriors", zsl_cmd.posteriors_path);
  zsl_app->add_option("--class-scores", zsl_cmd.class_scores_path);
  zsl_app->add_option("--hit-counts", zsl_cmd.hit_counts_path);
  zsl_app->add_option("--associations", zsl_cmd.data.association_paths,
                      "truth TSV for baseline calibration");
  zsl_app->add_option("--unseen", zsl_cmd.data.unseen)->required(false);
  zsl_app->add_option("--unseen-file", zsl_cmd.data.unseen_file);
  add_threshold_options(zsl_app, zsl_cmd.thresholds);
  zsl_app->add_option("--attr-prior", zsl_cmd.attr_prior);
  zsl_app->add_option("--assoc-strategy", zsl_cmd.assoc_strategy,
                      "best-threshold | top-q (for dice/similarity)");
  zsl_app->add_option("--top-q", zsl_cmd.top_q_override,
                      "override Q instead of the training-set average");
  zsl_app->add_option("--out-predictions", zsl_cmd.out_predictions);
  zsl_app->add_option("--out-metrics", zsl_cmd.out_metrics)->required();

  EvalAssocCmd eval_cmd;
  auto* eval_app = app.add_subcommand(
      "eval-assoc", "association mAP/accuracy and per-relation PR curves");
  eval_app->add_option("--predictions", eval_cmd.predictions_path)->required();
  eval_app->add_option("--truth", eval_cmd.truth_path)->required();
  eval_app->add_option("--schema", eval_cmd.schema_path);
  eval_app->add_option("--out-metrics", eval_cmd.out_metrics)->required();
  eval_app->add_option("--pr-dir", eval_cmd.pr_dir,
                       "directory for per-relation PR TSV files");

  ClusterCmd cluster_cmd;
  auto* cluster_app = app.add_subcommand(
      "cluster-relations",
      "derive data-driven relations by clustering attribute embeddings");
  cluster_app->add_option("--embeddings", cluster_cmd.embeddings_path)
      ->required();
  cluster_app->add_option("--associations", cluster_cmd.associations_path);
  cluster_app->add_option("--attributes-file", cluster_cmd.attributes_file);
  cluster_app->add_option("--n-clusters", cluster_cmd.n_clusters);
  cluster_app->add_option("-o,--out", cluster_cmd.out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const attrel::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*train_app) train_cmd.run();
    if (*predict_app) predict_cmd.run();
    if (*calibrate_app) calibrate_cmd.run();
    if (*zsl_app) zsl_cmd.run();
    if (*eval_app) eval_cmd.run();
    if (*cluster_app) cluster_cmd.run();
  } catch (const attrel::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
