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

#include "attrel/factor_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "attrel/errors.hpp"
#include "attrel/io.hpp"
#include "attrel/kernels.hpp"
#include "attrel/rng.hpp"

namespace attrel {

namespace {

void check_triplets(const FactorizedRelationModel& model,
                    const TripletDataset& data) {
  auto check = [&](const Triplet& t) {
    if (t.relation >= model.n_relations ||
        t.attribute_index >= model.n_attributes() ||
        t.class_index >= model.class_embeddings.rows())
      throw InputError("triplet index out of range for model");
  };
  for (const auto& t : data.positives) check(t);
  for (const auto& t : data.negatives) check(t);
}

}  // namespace

FactorizedRelationModel init_model(std::size_t dim, std::size_t n_relations,
                                   std::size_t n_factors, double lambda,
                                   const Matrix& class_embeddings,
                                   const Matrix& attr_embeddings,
                                   std::uint64_t seed, double init_scale,
                                   std::vector<std::string> relation_names,
                                   std::vector<std::string> attribute_names) {
  if (dim == 0 || n_relations == 0 || n_factors == 0)
    throw InputError("init_model: dim, N and L must be positive");
  if (lambda <= 0.0) throw InputError("init_model: lambda must be positive");
  if (!class_embeddings.empty() && class_embeddings.cols() != dim)
    throw InputError("init_model: class embedding width != dim");
  if (!attr_embeddings.empty() && attr_embeddings.cols() != dim)
    throw InputError("init_model: attribute embedding width != dim");
  if (!relation_names.empty() && relation_names.size() != n_relations)
    throw InputError("init_model: relation name count != N");
  if (!attribute_names.empty() &&
      attribute_names.size() != attr_embeddings.rows())
    throw InputError("init_model: attribute name count != rows");

  FactorizedRelationModel model;
  model.dim = dim;
  model.n_relations = n_relations;
  model.n_factors = n_factors;
  model.lambda = lambda;
  model.class_embeddings = class_embeddings;
  model.attr_embeddings = attr_embeddings;
  if (model.attr_embeddings.empty())
    model.attr_embeddings = Matrix(0, dim);
  if (model.class_embeddings.empty())
    model.class_embeddings = Matrix(0, dim);

  Rng rng(seed);
  model.factors.reserve(n_factors);
  for (std::size_t l = 0; l < n_factors; ++l) {
    Matrix theta(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        theta(i, j) = rng.uniform(-init_scale, init_scale);
    model.factors.push_back(std::move(theta));
  }
  model.mixing = Matrix(n_relations, n_factors,
                        lambda / (2.0 * static_cast<double>(n_factors)));

  if (relation_names.empty())
    for (std::size_t j = 0; j < n_relations; ++j)
      relation_names.push_back("r" + std::to_string(j));
  model.relation_names = std::move(relation_names);
  model.attribute_names = std::move(attribute_names);
  if (model.attribute_names.empty())
    for (std::size_t m = 0; m < model.attr_embeddings.rows(); ++m)
      model.attribute_names.push_back("attr" + std::to_string(m));
  return model;
}

Matrix relation_matrix(const FactorizedRelationModel& model, std::size_t j) {
  if (j >= model.n_relations)
    throw InputError("relation_matrix: relation index out of range");
  Matrix r(model.dim, model.dim);
  for (std::size_t l = 0; l < model.n_factors; ++l) {
    const double alpha = model.mixing(j, l);
    for (std::size_t i = 0; i < r.data().size(); ++i)
      r.data()[i] += alpha * model.factors[l].data()[i];
  }
  return r;
}

double bilinear_score(const FactorizedRelationModel& model,
                      std::span<const double> class_vec, std::size_t j,
                      std::size_t m) {
  if (j >= model.n_relations)
    throw InputError("bilinear_score: relation index out of range");
  if (m >= model.n_attributes())
    throw InputError("bilinear_score: attribute index out of range");
  if (class_vec.size() != model.dim)
    throw InputError("bilinear_score: class vector length != dim");
  return kernels::sigmoid(kernels::logit(model, class_vec, j, m));
}

double nll_loss(const FactorizedRelationModel& model,
                const TripletDataset& data) {
  check_triplets(model, data);
  const auto seq = kernels::labeled_sequence(data);
  return kernels::nll_sum(model, seq);
}

Gradients gradients(const FactorizedRelationModel& model,
                    const TripletDataset& batch, bool learn_attr) {
  check_triplets(model, batch);
  const auto seq = kernels::labeled_sequence(batch);
  return kernels::accumulate_batch(model, seq, learn_attr).grads;
}

std::vector<double> project_l1(std::span<const double> v, double lambda) {
  if (lambda <= 0.0) throw InputError("project_l1: lambda must be positive");
  std::vector<double> out(v.begin(), v.end());
  double l1 = 0.0;
  for (double x : out) l1 += std::fabs(x);
  if (l1 <= lambda) return out;

  std::vector<double> mag(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) mag[i] = std::fabs(out[i]);
  std::sort(mag.begin(), mag.end(), std::greater<double>());

  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    cumsum += mag[i];
    const double candidate =
        (cumsum - lambda) / static_cast<double>(i + 1);
    if (mag[i] - candidate > 0.0)
      theta = candidate;
    else
      break;
  }
  for (double& x : out) {
    const double shrunk = std::fabs(x) - theta;
    x = shrunk > 0.0 ? (x < 0.0 ? -shrunk : shrunk) : 0.0;
  }
  return out;
}

std::pair<FactorizedRelationModel, TrainReport> train(
    const FactorizedRelationModel& model, const TripletDataset& data,
    const TrainConfig& cfg) {
  if (data.size() == 0) throw InputError("train: empty dataset");
  if (cfg.learning_rate <= 0.0 || cfg.batch_size == 0)
    throw InputError("train: learning_rate and batch_size must be positive");
  check_triplets(model, data);

  const auto t_start = std::chrono::steady_clock::now();
  FactorizedRelationModel out = model;
  TrainReport report;

  auto sequence = kernels::labeled_sequence(data);
  const double n_total = static_cast<double>(sequence.size());
  Rng rng(cfg.seed);

  // Momentum state, allocated only when used.
  std::vector<Matrix> vel_factors;
  Matrix vel_mixing, vel_attr;
  const bool momentum = cfg.optimizer == Optimizer::kSgdMomentum;
  if (momentum) {
    vel_factors.assign(out.n_factors, Matrix(out.dim, out.dim));
    vel_mixing = Matrix(out.n_relations, out.n_factors);
    vel_attr = Matrix(out.attr_embeddings.rows(), out.dim);
  }

  auto apply = [&](std::vector<double>& param, const std::vector<double>& grad,
                   std::vector<double>* vel, double scale) {
    if (momentum) {
      for (std::size_t i = 0; i < param.size(); ++i) {
        (*vel)[i] = cfg.momentum * (*vel)[i] - scale * grad[i];
        param[i] += (*vel)[i];
      }
    } else {
      for (std::size_t i = 0; i < param.size(); ++i)
        param[i] -= scale * grad[i];
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(sequence);
    for (std::size_t start = 0, batch_no = 0; start < sequence.size();
         start += cfg.batch_size, ++batch_no) {
      const std::size_t count =
          std::min(cfg.batch_size, sequence.size() - start);
      const auto batch =
          std::span<const kernels::LabeledTriplet>(sequence).subspan(start,
                                                                     count);
      const auto result =
          kernels::accumulate_batch(out, batch, cfg.learn_attr_embeddings);
      if (!std::isfinite(result.loss_sum))
        throw ComputeError("train: non-finite loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no));

      const double scale = cfg.learning_rate / static_cast<double>(count);
      for (std::size_t l = 0; l < out.n_factors; ++l)
        apply(out.factors[l].data(), result.grads.d_factors[l].data(),
              momentum ? &vel_factors[l].data() : nullptr, scale);
      apply(out.mixing.data(), result.grads.d_mixing.data(),
            momentum ? &vel_mixing.data() : nullptr, scale);
      if (cfg.learn_attr_embeddings)
        apply(out.attr_embeddings.data(), result.grads.d_attr.data(),
              momentum ? &vel_attr.data() : nullptr, scale);

      for (std::size_t j = 0; j < out.n_relations; ++j) {
        const auto projected = project_l1(out.mixing.row(j), out.lambda);
        std::copy(projected.begin(), projected.end(),
                  out.mixing.row(j).begin());
      }
    }
    report.epoch_mean_loss.push_back(kernels::nll_sum(out, sequence) /
                                     n_total);
  }

  report.final_loss = report.epoch_mean_loss.empty()
                          ? kernels::nll_sum(out, sequence) / n_total
                          : report.epoch_mean_loss.back();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return {std::move(out), report};
}

Matrix score_class(const FactorizedRelationModel& model,
                   std::span<const double> class_vec) {
  if (class_vec.size() != model.dim)
    throw InputError("score_class: class vector length != dim");
  return kernels::score_matrix(model, class_vec);
}

namespace {

constexpr const char* kModelMagic = "attrel-model";
constexpr int kModelVersion = 1;

void write_matrix(std::ostringstream& out, const Matrix& m,
                  const char* indent) {
  out << "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out << ",";
    out << "\n" << indent << "[";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ", ";
      out << format_g17(m(i, j));
    }
    out << "]";
  }
  out << "]";
}

void write_names(std::ostringstream& out,
                 const std::vector<std::string>& names) {
  const nlohmann::json j = names;  // handles string escaping
  out << j.dump();
}

Matrix read_matrix(const nlohmann::json& j, std::size_t rows, std::size_t cols,
                   const std::string& field) {
  if (!j.is_array() || j.size() != rows)
    throw InputError("model file: field '" + field + "' must have " +
                     std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != cols)
      throw InputError("model file: field '" + field + "' row " +
                       std::to_string(i) + " must have " +
                       std::to_string(cols) + " columns");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw InputError("model file: non-numeric entry in '" + field + "'");
      m(i, c) = row[c].get<double>();
    }
  }
  if (!m.all_finite())
    throw InputError("model file: non-finite entry in '" + field + "'");
  return m;
}

}  // namespace

void save_model(const FactorizedRelationModel& model,
                const std::string& path) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"magic\": \"" << kModelMagic << "\",\n";
  out << "  \"format_version\": " << kModelVersion << ",\n";
  out << "  \"d\": " << model.dim << ",\n";
  out << "  \"N\": " << model.n_relations << ",\n";
  out << "  \"L\": " << model.n_factors << ",\n";
  out << "  \"lambda\": " << format_g17(model.lambda) << ",\n";
  out << "  \"relation_names\": ";
  write_names(out, model.relation_names);
  out << ",\n  \"attribute_names\": ";
  write_names(out, model.attribute_names);
  out << ",\n  \"factors\": [";
  for (std::size_t l = 0; l < model.n_factors; ++l) {
    if (l) out << ",";
    out << "\n   ";
    write_matrix(out, model.factors[l], "    ");
  }
  out << "],\n  \"mixing\": ";
  write_matrix(out, model.mixing, "    ");
  out << ",\n  \"attr_embeddings\": ";
  write_matrix(out, model.attr_embeddings, "    ");
  out << "\n}\n";
  atomic_write_file(path, out.str());
}

FactorizedRelationModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("model file " + path + ": " + e.what());
  }

  for (const char* field :
       {"magic", "format_version", "d", "N", "L", "lambda", "relation_names",
        "attribute_names", "factors", "mixing", "attr_embeddings"})
    if (!j.contains(field))
      throw InputError("model file " + path + ": missing field '" +
                       std::string(field) + "'");
  if (j["magic"] != kModelMagic)
    throw InputError("model file " + path + ": wrong magic string");
  if (j["format_version"] != kModelVersion)
    throw InputError("model file " + path + ": unsupported format_version");

  FactorizedRelationModel model;
  model.dim = j["d"].get<std::size_t>();
  model.n_relations = j["N"].get<std::size_t>();
  model.n_factors = j["L"].get<std::size_t>();
  model.lambda = j["lambda"].get<double>();
  model.relation_names = j["relation_names"].get<std::vector<std::string>>();
  model.attribute_names = j["attribute_names"].get<std::vector<std::string>>();
  if (model.relation_names.size() != model.n_relations)
    throw InputError("model file " + path + ": relation_names size != N");

  const auto& factors = j["factors"];
  if (!factors.is_array() || factors.size() != model.n_factors)
    throw InputError("model file " + path + ": factors size != L");
  for (std::size_t l = 0; l < model.n_factors; ++l)
    model.factors.push_back(
        read_matrix(factors[l], model.dim, model.dim, "factors"));
  model.mixing =
      read_matrix(j["mixing"], model.n_relations, model.n_factors, "mixing");
  model.attr_embeddings =
      read_matrix(j["attr_embeddings"], model.attribute_names.size(),
                  model.dim, "attr_embeddings");
  model.class_embeddings = Matrix(0, model.dim);
  return model;
}

}  // namespace attrel
