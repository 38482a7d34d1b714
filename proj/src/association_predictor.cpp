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

#include "attrel/association_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "attrel/errors.hpp"
#include "attrel/eval_metrics.hpp"
#include "attrel/io.hpp"
#include "attrel/kernels.hpp"
#include "attrel/rng.hpp"
#include "attrel/zsl_engine.hpp"

namespace attrel {

char decision_char(Decision d) {
  switch (d) {
    case Decision::kPositive:
      return '+';
    case Decision::kNegative:
      return '-';
    default:
      return '0';
  }
}

AssociationPrediction predict_associations(const FactorizedRelationModel& model,
                                           const RelationSchema& schema,
                                           std::span<const double> class_vec,
                                           const std::string& class_name,
                                           ThresholdPair thresholds) {
  if (thresholds.t_minus > thresholds.t_plus)
    throw InputError("predict_associations: t_minus must be <= t_plus");
  if (schema.assignment.size() != model.n_attributes())
    throw InputError("predict_associations: schema/model attribute mismatch");

  const Matrix scores = score_class(model, class_vec);
  AssociationPrediction pred;
  pred.class_name = class_name;
  pred.probabilities.resize(model.n_attributes());
  pred.decisions.resize(model.n_attributes());
  for (std::size_t m = 0; m < model.n_attributes(); ++m) {
    const double p = scores(schema.assignment[m], m);
    pred.probabilities[m] = p;
    if (p > thresholds.t_plus)
      pred.decisions[m] = Decision::kPositive;
    else if (p < thresholds.t_minus)
      pred.decisions[m] = Decision::kNegative;
    else
      pred.decisions[m] = Decision::kAbstain;
  }
  return pred;
}

std::vector<double> threshold_grid(double grid_step) {
  if (!(grid_step > 0.0) || grid_step > 1.0)
    throw InputError("threshold grid_step must be in (0, 1]");
  std::vector<double> grid;
  for (double t = 0.0; t <= 1.0 + 1e-12; t += grid_step)
    grid.push_back(std::min(t, 1.0));
  if (grid.back() < 1.0 - 1e-12) grid.push_back(1.0);
  return grid;
}

namespace {

// Shuffled seen-class indices; the deterministic base for every fold split.
std::vector<std::size_t> shuffled_seen(const ClassVocabulary& classes,
                                       std::uint64_t seed) {
  std::vector<std::size_t> seen;
  for (std::size_t k = 0; k < classes.size(); ++k)
    if (classes.seen[k]) seen.push_back(k);
  Rng rng(seed);
  rng.shuffle(seen);
  return seen;
}

struct FoldModel {
  FactorizedRelationModel model;
  std::vector<std::size_t> holdout;  // class indices
};

// Train on the seen classes minus `holdout`.
FactorizedRelationModel train_without(const Dataset& data,
                                      const EmbeddingTable& embeddings,
                                      const std::vector<std::size_t>& holdout,
                                      const TrainConfig& cfg) {
  ClassVocabulary fold_classes = data.classes;
  for (std::size_t k : holdout) fold_classes.seen[k] = false;

  Matrix class_emb(data.classes.size(), embeddings.dim());
  for (std::size_t k = 0; k < data.classes.size(); ++k) {
    const auto pv = embed_phrase(embeddings, data.classes.names[k]);
    std::copy(pv.vector.begin(), pv.vector.end(), class_emb.row(k).begin());
  }
  Matrix attr_emb(data.attributes.size(), embeddings.dim());
  for (std::size_t m = 0; m < data.attributes.size(); ++m) {
    const auto pv = embed_phrase(embeddings, data.attributes.names[m]);
    std::copy(pv.vector.begin(), pv.vector.end(), attr_emb.row(m).begin());
  }

  auto model = init_model(embeddings.dim(), data.schema.n_relations(),
                          cfg.n_factors, cfg.lambda, class_emb, attr_emb,
                          cfg.seed, cfg.init_scale, data.schema.relation_names,
                          data.attributes.names);
  const auto triplets = build_triplets(data.assoc, data.schema, fold_classes);
  if (triplets.size() == 0)
    throw InputError("cross-validation fold has no training triplets");
  auto [trained, report] = train(model, triplets, cfg);
  (void)report;
  return std::move(trained);
}

}  // namespace

CalibrationResult calibrate_thresholds(const Dataset& data,
                                       const EmbeddingTable& embeddings,
                                       const PosteriorDataset& posteriors,
                                       const TrainConfig& cfg,
                                       const CalibrationConfig& cal) {
  const std::size_t n_seen = data.classes.seen_count();
  std::size_t k_holdout = cal.k_holdout;
  if (k_holdout == 0)
    k_holdout = static_cast<std::size_t>(
        std::ceil(0.2 * static_cast<double>(n_seen)));
  if (k_holdout >= n_seen)
    throw InputError("calibrate_thresholds: k_holdout must be < seen classes");
  if (cal.folds == 0) throw InputError("calibrate_thresholds: folds must be >= 1");

  const std::vector<double> grid = threshold_grid(cal.grid_step);

  const auto order = shuffled_seen(data.classes, cfg.seed);

  // Per fold: held-out class probabilities plus the posterior rows of their
  // images, cached once; the grid sweep then only re-thresholds.
  struct FoldEval {
    std::vector<std::string> class_names;
    std::vector<std::vector<double>> class_probs;  // per class: M probs
    PosteriorDataset subset;
  };
  std::vector<FoldEval> fold_evals;

  for (std::size_t f = 0; f < cal.folds; ++f) {
    std::vector<std::size_t> holdout(k_holdout);
    for (std::size_t i = 0; i < k_holdout; ++i)
      holdout[i] = order[(f * k_holdout + i) % order.size()];
    std::sort(holdout.begin(), holdout.end());
    holdout.erase(std::unique(holdout.begin(), holdout.end()), holdout.end());

    const auto model = train_without(data, embeddings, holdout, cfg);

    FoldEval eval;
    for (std::size_t k : holdout) {
      eval.class_names.push_back(data.classes.names[k]);
      std::vector<double> probs(data.attributes.size());
      const Matrix scores = score_class(model, model.class_embeddings.row(k));
      for (std::size_t m = 0; m < data.attributes.size(); ++m)
        probs[m] = scores(data.schema.assignment[m], m);
      eval.class_probs.push_back(std::move(probs));
    }

    // Posterior rows of held-out-class images.
    for (std::size_t i = 0; i < posteriors.n_images(); ++i) {
      const bool held =
          std::find(eval.class_names.begin(), eval.class_names.end(),
                    posteriors.true_class[i]) != eval.class_names.end();
      if (!held) continue;
      eval.subset.image_ids.push_back(posteriors.image_ids[i]);
      eval.subset.true_class.push_back(posteriors.true_class[i]);
    }
    eval.subset.posteriors =
        Matrix(eval.subset.image_ids.size(), data.attributes.size());
    std::size_t row = 0;
    for (std::size_t i = 0; i < posteriors.n_images(); ++i) {
      const bool held =
          std::find(eval.class_names.begin(), eval.class_names.end(),
                    posteriors.true_class[i]) != eval.class_names.end();
      if (!held) continue;
      std::copy(posteriors.posteriors.row(i).begin(),
                posteriors.posteriors.row(i).end(),
                eval.subset.posteriors.row(row++).begin());
    }
    eval.subset.attribute_prior = posteriors.attribute_prior;
    if (eval.subset.image_ids.empty())
      throw InputError(
          "calibrate_thresholds: no posterior images for held-out classes of "
          "fold " +
          std::to_string(f));
    fold_evals.push_back(std::move(eval));
  }

  CalibrationResult best;
  best.mean_holdout_accuracy = -1.0;
  double best_margin = -1.0;

  for (const double t_minus : grid) {
    for (const double t_plus : grid) {
      if (t_plus < t_minus) continue;
      double acc_sum = 0.0;
      bool degenerate = false;
      for (const auto& eval : fold_evals) {
        std::vector<AssociationPrediction> preds;
        for (std::size_t z = 0; z < eval.class_names.size(); ++z) {
          AssociationPrediction p;
          p.class_name = eval.class_names[z];
          p.probabilities = eval.class_probs[z];
          p.decisions.resize(p.probabilities.size());
          bool any_decided = false;
          for (std::size_t m = 0; m < p.probabilities.size(); ++m) {
            if (p.probabilities[m] > t_plus) {
              p.decisions[m] = Decision::kPositive;
              any_decided = true;
            } else if (p.probabilities[m] < t_minus) {
              p.decisions[m] = Decision::kNegative;
              any_decided = true;
            } else {
              p.decisions[m] = Decision::kAbstain;
            }
          }
          if (!any_decided) degenerate = true;
          preds.push_back(std::move(p));
        }
        if (degenerate) break;
        const auto predicted = classify_zsl(preds, eval.subset);
        acc_sum += mean_per_class_accuracy(predicted, eval.subset.true_class);
      }
      const double mean_acc =
          degenerate ? 0.0
                     : acc_sum / static_cast<double>(fold_evals.size());
      const double margin = t_plus - t_minus;
      const bool better =
          mean_acc > best.mean_holdout_accuracy ||
          (mean_acc == best.mean_holdout_accuracy &&
           (margin > best_margin ||
            (margin == best_margin && t_minus < best.thresholds.t_minus)));
      if (better) {
        best.mean_holdout_accuracy = mean_acc;
        best.thresholds = {t_minus, t_plus};
        best_margin = margin;
      }
    }
  }
  return best;
}

HyperparameterChoice select_hyperparameters(
    std::span<const std::size_t> factor_candidates,
    std::span<const double> lambda_candidates, const Dataset& data,
    const EmbeddingTable& embeddings, const TrainConfig& base_cfg,
    std::size_t folds) {
  if (factor_candidates.empty() || lambda_candidates.empty())
    throw InputError("select_hyperparameters: empty candidate list");
  const std::size_t n_seen = data.classes.seen_count();
  if (folds == 0 || folds > n_seen)
    throw InputError("select_hyperparameters: folds must be in [1, " +
                     std::to_string(n_seen) + "]");

  const auto order = shuffled_seen(data.classes, base_cfg.seed);

  // Near-equal chunks of the shuffled class list.
  std::vector<std::vector<std::size_t>> fold_classes(folds);
  for (std::size_t i = 0; i < order.size(); ++i)
    fold_classes[i % folds].push_back(order[i]);

  // Scan candidates ascending so ties resolve to smaller L, then smaller
  // lambda, regardless of input order.
  std::vector<std::size_t> Ls(factor_candidates.begin(),
                              factor_candidates.end());
  std::vector<double> lambdas(lambda_candidates.begin(),
                              lambda_candidates.end());
  std::sort(Ls.begin(), Ls.end());
  std::sort(lambdas.begin(), lambdas.end());

  HyperparameterChoice best;
  best.mean_validation_map = -1.0;

  for (const std::size_t L : Ls) {
    for (const double lambda : lambdas) {
      TrainConfig cfg = base_cfg;
      cfg.n_factors = L;
      cfg.lambda = lambda;

      double map_sum = 0.0;
      std::size_t evaluated_folds = 0;
      for (std::size_t f = 0; f < folds; ++f) {
        if (fold_classes[f].empty()) continue;
        const auto model =
            train_without(data, embeddings, fold_classes[f], cfg);
        std::vector<RankedPredictions> per_class;
        for (std::size_t k : fold_classes[f]) {
          RankedPredictions rp;
          const Matrix scores =
              score_class(model, model.class_embeddings.row(k));
          for (std::size_t m = 0; m < data.attributes.size(); ++m) {
            const Assoc truth = data.assoc.at(k, m);
            if (truth == Assoc::kUnknown) continue;
            rp.scores.push_back(scores(data.schema.assignment[m], m));
            rp.labels.push_back(truth == Assoc::kPositive ? 1 : 0);
          }
          const bool has_pos = std::any_of(rp.labels.begin(), rp.labels.end(),
                                           [](int l) { return l != 0; });
          if (has_pos) per_class.push_back(std::move(rp));
        }
        if (per_class.empty()) continue;
        map_sum += mean_ap(per_class);
        ++evaluated_folds;
      }
      if (evaluated_folds == 0)
        throw InputError(
            "select_hyperparameters: no fold produced evaluable classes");
      const double mean_map =
          map_sum / static_cast<double>(evaluated_folds);
      // Strict > keeps the first (smallest L, then smallest lambda) on ties.
      if (mean_map > best.mean_validation_map) {
        best.mean_validation_map = mean_map;
        best.n_factors = L;
        best.lambda = lambda;
      }
    }
  }
  return best;
}

std::string predictions_tsv(const std::vector<AssociationPrediction>& preds,
                            const AttributeVocabulary& attrs) {
  std::ostringstream out;
  out << "class\tattribute\tprobability\tdecision\n";
  for (const auto& pred : preds) {
    if (pred.probabilities.size() != attrs.size())
      throw InputError("predictions_tsv: attribute count mismatch");
    for (std::size_t m = 0; m < attrs.size(); ++m)
      out << pred.class_name << '\t' << attrs.names[m] << '\t'
          << format_g17(pred.probabilities[m]) << '\t'
          << decision_char(pred.decisions[m]) << '\n';
  }
  return out.str();
}

}  // namespace attrel
