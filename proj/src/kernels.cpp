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

#include "attrel/kernels.hpp"

#include <algorithm>

#include "attrel/parallel.hpp"

namespace attrel::kernels {

namespace {

Gradients zero_gradients(const FactorizedRelationModel& model) {
  Gradients g;
  g.d_factors.assign(model.n_factors,
                     Matrix(model.dim, model.dim));
  g.d_mixing = Matrix(model.n_relations, model.n_factors);
  g.d_attr = Matrix(model.attr_embeddings.rows(), model.dim);
  return g;
}

// One triplet's contribution to loss and gradients. Residual e = p - t.
// dTheta_l += e * alpha_l * (c outer a); dalpha_l += e * c^T Theta_l a;
// dAttr += e * R_j^T c. The Theta and attribute passes are fused: both walk
// the same (l, p, q) index range.
void add_triplet(const FactorizedRelationModel& model,
                 const LabeledTriplet& lt, bool learn_attr, Gradients& g,
                 double& loss, std::vector<double>& u,
                 std::vector<double>& s) {
  const std::size_t d = model.dim;
  const std::size_t n_factors = model.n_factors;
  const auto c = model.class_embeddings.row(lt.triplet.class_index);
  const auto a = model.attr_embeddings.row(lt.triplet.attribute_index);
  const std::size_t j = lt.triplet.relation;

  for (std::size_t l = 0; l < n_factors; ++l) {
    matvec(model.factors[l], a, u);
    s[l] = dot(c, std::span<const double>(u));
  }
  double z = 0.0;
  for (std::size_t l = 0; l < n_factors; ++l) z += model.mixing(j, l) * s[l];

  loss += lt.positive ? softplus(-z) : softplus(z);
  const double e = sigmoid(z) - (lt.positive ? 1.0 : 0.0);

  for (std::size_t l = 0; l < n_factors; ++l)
    g.d_mixing(j, l) += e * s[l];

  auto d_attr_row = g.d_attr.row(lt.triplet.attribute_index);
  for (std::size_t l = 0; l < n_factors; ++l) {
    const double coef = e * model.mixing(j, l);
    if (coef == 0.0) continue;
    Matrix& d_theta = g.d_factors[l];
    const Matrix& theta = model.factors[l];
    for (std::size_t p = 0; p < d; ++p) {
      const double cp = coef * c[p];
      auto d_theta_row = d_theta.row(p);
      const auto theta_row = theta.row(p);
      if (learn_attr) {
        for (std::size_t q = 0; q < d; ++q) {
          d_theta_row[q] += cp * a[q];
          d_attr_row[q] += cp * theta_row[q];
        }
      } else {
        for (std::size_t q = 0; q < d; ++q) d_theta_row[q] += cp * a[q];
      }
    }
  }
}

void merge_into(Gradients& out, double& loss_out, const Gradients& part,
                double loss_part) {
  for (std::size_t l = 0; l < out.d_factors.size(); ++l) {
    auto& dst = out.d_factors[l].data();
    const auto& src = part.d_factors[l].data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  for (std::size_t i = 0; i < out.d_mixing.data().size(); ++i)
    out.d_mixing.data()[i] += part.d_mixing.data()[i];
  for (std::size_t i = 0; i < out.d_attr.data().size(); ++i)
    out.d_attr.data()[i] += part.d_attr.data()[i];
  loss_out += loss_part;
}

}  // namespace

std::vector<LabeledTriplet> labeled_sequence(const TripletDataset& data) {
  std::vector<LabeledTriplet> seq;
  seq.reserve(data.size());
  for (const auto& t : data.positives) seq.push_back({t, true});
  for (const auto& t : data.negatives) seq.push_back({t, false});
  return seq;
}

double logit(const FactorizedRelationModel& model,
             std::span<const double> class_vec, std::size_t j, std::size_t m) {
  const auto a = model.attr_embeddings.row(m);
  std::vector<double> u(model.dim);
  double z = 0.0;
  for (std::size_t l = 0; l < model.n_factors; ++l) {
    const double alpha = model.mixing(j, l);
    if (alpha == 0.0) continue;
    matvec(model.factors[l], a, u);
    z += alpha * dot(class_vec, std::span<const double>(u));
  }
  return z;
}

BatchResult accumulate_batch(const FactorizedRelationModel& model,
                             std::span<const LabeledTriplet> batch,
                             bool learn_attr) {
  const std::size_t n_blocks = par::block_count(batch.size());
  std::vector<Gradients> parts(n_blocks);
  std::vector<double> part_loss(n_blocks, 0.0);

  par::parallel_for(n_blocks, [&](std::size_t b) {
    Gradients g = zero_gradients(model);
    double loss = 0.0;
    std::vector<double> u(model.dim), s(model.n_factors);
    const std::size_t lo = b * par::kReductionBlock;
    const std::size_t hi = std::min(batch.size(), lo + par::kReductionBlock);
    for (std::size_t i = lo; i < hi; ++i)
      add_triplet(model, batch[i], learn_attr, g, loss, u, s);
    parts[b] = std::move(g);
    part_loss[b] = loss;
  });

  BatchResult out;
  out.grads = zero_gradients(model);
  for (std::size_t b = 0; b < n_blocks; ++b)
    merge_into(out.grads, out.loss_sum, parts[b], part_loss[b]);
  return out;
}

double nll_sum(const FactorizedRelationModel& model,
               std::span<const LabeledTriplet> data) {
  const std::size_t n_blocks = par::block_count(data.size());
  std::vector<double> part(n_blocks, 0.0);
  par::parallel_for(n_blocks, [&](std::size_t b) {
    double loss = 0.0;
    const std::size_t lo = b * par::kReductionBlock;
    const std::size_t hi = std::min(data.size(), lo + par::kReductionBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& lt = data[i];
      const double z =
          logit(model, model.class_embeddings.row(lt.triplet.class_index),
                lt.triplet.relation, lt.triplet.attribute_index);
      loss += lt.positive ? softplus(-z) : softplus(z);
    }
    part[b] = loss;
  });
  double total = 0.0;
  for (double p : part) total += p;
  return total;
}

Matrix score_matrix(const FactorizedRelationModel& model,
                    std::span<const double> class_vec) {
  const std::size_t n = model.n_relations;
  const std::size_t m = model.n_attributes();
  // y_l = Theta_l^T c, shared across all attributes and relations.
  Matrix y(model.n_factors, model.dim);
  for (std::size_t l = 0; l < model.n_factors; ++l)
    matvec_transposed(model.factors[l], class_vec, y.row(l));

  Matrix out(n, m);
  par::parallel_for(m, [&](std::size_t am) {
    const auto a = model.attr_embeddings.row(am);
    std::vector<double> z(model.n_factors);
    for (std::size_t l = 0; l < model.n_factors; ++l) z[l] = dot(y.row(l), a);
    for (std::size_t j = 0; j < n; ++j) {
      double logit_jm = 0.0;
      for (std::size_t l = 0; l < model.n_factors; ++l)
        logit_jm += model.mixing(j, l) * z[l];
      out(j, am) = sigmoid(logit_jm);
    }
  });
  return out;
}

namespace reference {

BatchResult accumulate_batch(const FactorizedRelationModel& model,
                             std::span<const LabeledTriplet> batch,
                             bool learn_attr) {
  BatchResult out;
  out.grads = zero_gradients(model);
  std::vector<double> u(model.dim), s(model.n_factors);
  for (const auto& lt : batch)
    add_triplet(model, lt, learn_attr, out.grads, out.loss_sum, u, s);
  return out;
}

double nll_sum(const FactorizedRelationModel& model,
               std::span<const LabeledTriplet> data) {
  double total = 0.0;
  for (const auto& lt : data) {
    const double z =
        logit(model, model.class_embeddings.row(lt.triplet.class_index),
              lt.triplet.relation, lt.triplet.attribute_index);
    total += lt.positive ? softplus(-z) : softplus(z);
  }
  return total;
}

Matrix score_matrix(const FactorizedRelationModel& model,
                    std::span<const double> class_vec) {
  Matrix y(model.n_factors, model.dim);
  for (std::size_t l = 0; l < model.n_factors; ++l)
    matvec_transposed(model.factors[l], class_vec, y.row(l));

  Matrix out(model.n_relations, model.n_attributes());
  std::vector<double> z(model.n_factors);
  for (std::size_t am = 0; am < model.n_attributes(); ++am) {
    const auto a = model.attr_embeddings.row(am);
    for (std::size_t l = 0; l < model.n_factors; ++l) z[l] = dot(y.row(l), a);
    for (std::size_t j = 0; j < model.n_relations; ++j) {
      double logit_jm = 0.0;
      for (std::size_t l = 0; l < model.n_factors; ++l)
        logit_jm += model.mixing(j, l) * z[l];
      out(j, am) = sigmoid(logit_jm);
    }
  }
  return out;
}

}  // namespace reference

}  // namespace attrel::kernels
