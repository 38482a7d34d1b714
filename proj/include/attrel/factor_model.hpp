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
#include <utility>
#include <vector>

#include "attrel/matrix.hpp"
#include "attrel/relation_schema.hpp"

namespace attrel {

// Factorized bilinear relation tensor. Each relation operator is a sparse
// mixture of shared d x d latent factors; mixing rows live inside the L1
// ball of radius lambda. Class embeddings are frozen (classes are an open
// set), attribute embeddings are trainable.
struct FactorizedRelationModel {
  std::size_t dim = 0;
  std::size_t n_relations = 0;
  std::size_t n_factors = 0;
  double lambda = 1.0;

  std::vector<Matrix> factors;   // L matrices, each d x d
  Matrix mixing;                 // N x L
  Matrix class_embeddings;       // training classes x d, frozen
  Matrix attr_embeddings;        // M x d, learnable

  std::vector<std::string> relation_names;
  std::vector<std::string> attribute_names;

  std::size_t n_attributes() const { return attr_embeddings.rows(); }
};

enum class Optimizer { kSgd, kSgdMomentum };

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  double lambda = 1.0;
  std::size_t n_factors = 4;
  double init_scale = 0.1;
  bool learn_attr_embeddings = true;
  Optimizer optimizer = Optimizer::kSgd;
  double momentum = 0.9;
};

struct TrainReport {
  std::vector<double> epoch_mean_loss;  // mean NLL per triplet, end of epoch
  double final_loss = 0.0;
  double wall_seconds = 0.0;
};

struct Gradients {
  std::vector<Matrix> d_factors;  // L of d x d
  Matrix d_mixing;                // N x L
  Matrix d_attr;                  // M x d
};

// Theta entries i.i.d. uniform in [-init_scale, init_scale] from the seeded
// generator; every mixing entry starts at lambda / (2L), strictly inside the
// L1 ball; embeddings are copied.
FactorizedRelationModel init_model(std::size_t dim, std::size_t n_relations,
                                   std::size_t n_factors, double lambda,
                                   const Matrix& class_embeddings,
                                   const Matrix& attr_embeddings,
                                   std::uint64_t seed, double init_scale = 0.1,
                                   std::vector<std::string> relation_names = {},
                                   std::vector<std::string> attribute_names = {});

// Sum_l mixing(j, l) * Theta_l, materialized.
Matrix relation_matrix(const FactorizedRelationModel& model, std::size_t j);

// sigma(class_vec^T R_j v(a_m)).
double bilinear_score(const FactorizedRelationModel& model,
                      std::span<const double> class_vec, std::size_t j,
                      std::size_t m);

// Negative log-likelihood over positives and negatives; 0 for empty data.
double nll_loss(const FactorizedRelationModel& model,
                const TripletDataset& data);

// Analytic gradients of nll_loss (a sum, not a mean) w.r.t. Theta, mixing
// and attribute embeddings. Class embeddings receive no gradient. With
// learn_attr false, d_attr is identically zero.
Gradients gradients(const FactorizedRelationModel& model,
                    const TripletDataset& batch, bool learn_attr = true);

// Euclidean projection onto the L1 ball of radius lambda (sort-based simplex
// projection on |v| with sign restoration). Feasible input is returned
// unchanged.
std::vector<double> project_l1(std::span<const double> v, double lambda);

// Mini-batch projected SGD. Shuffling, batching and updates are driven only
// by cfg.seed, so equal (model, data, cfg) give a bit-identical result.
// Class embeddings are byte-stable across training.
std::pair<FactorizedRelationModel, TrainReport> train(
    const FactorizedRelationModel& model, const TripletDataset& data,
    const TrainConfig& cfg);

// Probability matrix: entry (j, m) = bilinear_score(model, class_vec, j, m).
Matrix score_class(const FactorizedRelationModel& model,
                   std::span<const double> class_vec);

// Model file: JSON, matrices as nested arrays with 17 significant digits.
// Class embeddings are not stored; scoring takes vectors.
void save_model(const FactorizedRelationModel& model, const std::string& path);
FactorizedRelationModel load_model(const std::string& path);

}  // namespace attrel
