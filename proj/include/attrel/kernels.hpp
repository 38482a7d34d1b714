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

// Hot loops, each in two flavors: the OpenMP kernels used everywhere, and a
// plain serial reference under kernels::reference used by tests and the
// benchmark. Element-wise kernels match the reference bitwise; the blocked
// reductions (loss, gradients) are bitwise stable across runs and thread
// counts but may differ from the naive serial sum in the last ulp, since
// partials merge in block order.

#include <cmath>
#include <span>
#include <vector>

#include "attrel/factor_model.hpp"
#include "attrel/relation_schema.hpp"

namespace attrel::kernels {

// Numerically stable logistic helpers. softplus(x) = log(1 + e^x) never
// overflows; -log sigma(x) = softplus(-x).
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

struct LabeledTriplet {
  Triplet triplet;
  bool positive;
};

// P then N, in stored order: the canonical sequence all reductions run over.
std::vector<LabeledTriplet> labeled_sequence(const TripletDataset& data);

// class_vec^T R_j v(a_m) without materializing R_j.
double logit(const FactorizedRelationModel& model,
             std::span<const double> class_vec, std::size_t j, std::size_t m);

struct BatchResult {
  Gradients grads;
  double loss_sum = 0.0;
};

// Gradient + loss accumulation over a batch. Parallel over fixed-size
// blocks, merged in block order.
BatchResult accumulate_batch(const FactorizedRelationModel& model,
                             std::span<const LabeledTriplet> batch,
                             bool learn_attr);

// Total NLL, blocked reduction over the canonical sequence.
double nll_sum(const FactorizedRelationModel& model,
               std::span<const LabeledTriplet> data);

// N x M probability matrix for one class vector; parallel over attributes.
Matrix score_matrix(const FactorizedRelationModel& model,
                    std::span<const double> class_vec);

namespace reference {

// Straightforward in-order implementations kept as the testing baseline.
BatchResult accumulate_batch(const FactorizedRelationModel& model,
                             std::span<const LabeledTriplet> batch,
                             bool learn_attr);
double nll_sum(const FactorizedRelationModel& model,
               std::span<const LabeledTriplet> data);
Matrix score_matrix(const FactorizedRelationModel& model,
                    std::span<const double> class_vec);

}  // namespace reference

}  // namespace attrel::kernels
