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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attrel/factor_model.hpp"
#include "attrel/relation_schema.hpp"

namespace attrel {

struct PosteriorDataset;  // zsl_engine.hpp

struct ThresholdPair {
  double t_minus = 0.5;
  double t_plus = 0.5;
};

enum class Decision : std::int8_t { kNegative = -1, kAbstain = 0, kPositive = 1 };

// Per-attribute probability and thresholded decision for one class.
// positive iff p > t_plus, negative iff p < t_minus, abstain otherwise.
struct AssociationPrediction {
  std::string class_name;
  std::vector<double> probabilities;
  std::vector<Decision> decisions;
};

AssociationPrediction predict_associations(const FactorizedRelationModel& model,
                                           const RelationSchema& schema,
                                           std::span<const double> class_vec,
                                           const std::string& class_name,
                                           ThresholdPair thresholds);

struct CalibrationConfig {
  std::size_t k_holdout = 0;  // 0 = ceil(20% of seen classes)
  std::size_t folds = 5;
  double grid_step = 0.05;
};

struct CalibrationResult {
  ThresholdPair thresholds;
  double mean_holdout_accuracy = 0.0;
};

// Candidate threshold values {0, step, ..., 1}; 1 is always included. The
// calibration sweep pairs these up over the triangle t_minus <= t_plus.
std::vector<double> threshold_grid(double grid_step);

// Leave-K-class-out threshold search: per fold, train on the remaining seen
// classes, score the held-out ones, and sweep (t_minus, t_plus) over the
// triangular grid {0, step, .., 1}^2 maximizing mean held-out zero-shot
// mean-per-class accuracy. Ties prefer a larger abstention margin, then a
// smaller t_minus. A grid point where some held-out class abstains on every
// attribute scores 0. Deterministic given cfg.seed.
CalibrationResult calibrate_thresholds(const Dataset& data,
                                       const EmbeddingTable& embeddings,
                                       const PosteriorDataset& posteriors,
                                       const TrainConfig& cfg,
                                       const CalibrationConfig& cal);

struct HyperparameterChoice {
  std::size_t n_factors = 0;
  double lambda = 0.0;
  double mean_validation_map = 0.0;
};

// 5-fold grid search over (L, lambda) maximizing mean validation association
// mAP; folds partition the seen classes. Ties prefer smaller L, then smaller
// lambda.
HyperparameterChoice select_hyperparameters(
    std::span<const std::size_t> factor_candidates,
    std::span<const double> lambda_candidates, const Dataset& data,
    const EmbeddingTable& embeddings, const TrainConfig& base_cfg,
    std::size_t folds = 5);

// Prediction rows "class<TAB>attribute<TAB>probability<TAB>decision" with
// decision in {+,-,0}.
std::string predictions_tsv(const std::vector<AssociationPrediction>& preds,
                            const AttributeVocabulary& attrs);

char decision_char(Decision d);

}  // namespace attrel
