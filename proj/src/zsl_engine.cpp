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

#include "attrel/zsl_engine.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "attrel/errors.hpp"
#include "attrel/io.hpp"
#include "attrel/parallel.hpp"

namespace attrel {

namespace {

std::unordered_map<std::string, std::size_t> name_index(
    const std::vector<std::string>& names, const char* what) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (!idx.emplace(names[i], i).second)
      throw InputError(std::string(what) + ": duplicate name '" + names[i] +
                       "'");
  return idx;
}

void check_priors(std::span<const double> priors) {
  for (double p : priors)
    if (!(p > 0.0 && p < 1.0))
      throw InputError("attribute prior must be strictly inside (0, 1), got " +
                       format_g17(p));
}

}  // namespace

PosteriorDataset load_posterior_file(const std::string& path,
                                     const AttributeVocabulary& attrs,
                                     double attribute_prior) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InputError(path + ":1: missing header");
  const auto header = split_tabs(lines[0]);
  if (header.size() < 3 || header[0] != "image_id" || header[1] != "class")
    throw InputError(path +
                     ":1: header must be 'image_id<TAB>class<TAB><attrs>'");

  // Map file columns onto vocabulary order by attribute name.
  const auto attr_idx = name_index(attrs.names, "attribute vocabulary");
  std::vector<std::size_t> col_to_attr(header.size() - 2);
  std::vector<bool> covered(attrs.size(), false);
  for (std::size_t c = 2; c < header.size(); ++c) {
    const auto it = attr_idx.find(header[c]);
    if (it == attr_idx.end())
      throw InputError(path + ":1: unknown attribute column '" + header[c] +
                       "'");
    if (covered[it->second])
      throw InputError(path + ":1: duplicate attribute column '" + header[c] +
                       "'");
    covered[it->second] = true;
    col_to_attr[c - 2] = it->second;
  }
  for (std::size_t m = 0; m < attrs.size(); ++m)
    if (!covered[m])
      throw InputError(path + ": missing attribute column '" + attrs.names[m] +
                       "'");

  PosteriorDataset ds;
  std::vector<std::vector<double>> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_tabs(lines[li]);
    if (fields.size() != header.size())
      throw InputError(path + ":" + std::to_string(li + 1) +
                       ": wrong column count");
    ds.image_ids.push_back(fields[0]);
    ds.true_class.push_back(fields[1]);
    std::vector<double> row(attrs.size());
    for (std::size_t c = 2; c < fields.size(); ++c) {
      const double p =
          parse_double(fields[c], path + ":" + std::to_string(li + 1));
      if (p < 0.0 || p > 1.0)
        throw InputError(path + ":" + std::to_string(li + 1) +
                         ": posterior outside [0, 1]: " + fields[c]);
      row[col_to_attr[c - 2]] = p;
    }
    rows.push_back(std::move(row));
  }

  ds.posteriors = Matrix(rows.size(), attrs.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), ds.posteriors.row(i).begin());
  ds.attribute_prior.assign(attrs.size(), attribute_prior);
  return ds;
}

ClassScoreDataset load_class_score_file(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InputError(path + ":1: missing header");
  const auto header = split_tabs(lines[0]);
  if (header.size() < 3 || header[0] != "image_id" || header[1] != "class")
    throw InputError(path +
                     ":1: header must be 'image_id<TAB>class<TAB><classes>'");

  ClassScoreDataset ds;
  ds.class_names.assign(header.begin() + 2, header.end());
  name_index(ds.class_names, "class score columns");

  std::vector<std::vector<double>> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_tabs(lines[li]);
    if (fields.size() != header.size())
      throw InputError(path + ":" + std::to_string(li + 1) +
                       ": wrong column count");
    ds.image_ids.push_back(fields[0]);
    ds.true_class.push_back(fields[1]);
    std::vector<double> row(ds.class_names.size());
    for (std::size_t c = 2; c < fields.size(); ++c)
      row[c - 2] = parse_double(fields[c], path + ":" + std::to_string(li + 1));
    rows.push_back(std::move(row));
  }
  ds.scores = Matrix(rows.size(), ds.class_names.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), ds.scores.row(i).begin());
  return ds;
}

HitCountTable load_hit_count_file(const std::string& path) {
  const auto lines = read_lines(path);
  HitCountTable table;
  std::unordered_map<std::string, std::size_t> class_idx, attr_idx;
  struct Entry {
    std::size_t k, m;
    double h_pair;
  };
  std::vector<Entry> entries;
  auto intern = [](std::unordered_map<std::string, std::size_t>& idx,
                   std::vector<std::string>& names, std::vector<double>& hits,
                   const std::string& name, double value,
                   const std::string& where) {
    const auto [it, inserted] = idx.emplace(name, names.size());
    if (inserted) {
      names.push_back(name);
      hits.push_back(value);
    } else if (hits[it->second] != value) {
      throw InputError(where + ": conflicting hit count for '" + name + "'");
    }
    return it->second;
  };

  for (std::size_t li = 0; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_tabs(lines[li]);
    if (li == 0 && fields.size() >= 2 && fields[0] == "class" &&
        fields[1] == "attribute")
      continue;  // header
    const std::string where = path + ":" + std::to_string(li + 1);
    if (fields.size() != 5)
      throw InputError(where + ": expected 5 columns");
    const double h_class = parse_double(fields[2], where);
    const double h_attr = parse_double(fields[3], where);
    const double h_pair = parse_double(fields[4], where);
    if (h_class < 0.0 || h_attr < 0.0 || h_pair < 0.0)
      throw InputError(where + ": negative hit count");
    const std::size_t k = intern(class_idx, table.class_names,
                                 table.class_hits, fields[0], h_class, where);
    const std::size_t m = intern(attr_idx, table.attribute_names,
                                 table.attr_hits, fields[1], h_attr, where);
    entries.push_back({k, m, h_pair});
  }
  table.pair_hits =
      Matrix(table.class_names.size(), table.attribute_names.size());
  for (const auto& e : entries) table.pair_hits(e.k, e.m) = e.h_pair;
  return table;
}

double dap_log_score(std::span<const Decision> decisions,
                     std::span<const double> posterior_row,
                     std::span<const double> priors) {
  if (decisions.size() != posterior_row.size() ||
      decisions.size() != priors.size())
    throw InputError("dap_score: length mismatch");
  double log_score = 0.0;
  for (std::size_t m = 0; m < decisions.size(); ++m) {
    if (decisions[m] == Decision::kAbstain) continue;
    const double prior = priors[m];
    if (!(prior > 0.0 && prior < 1.0))
      throw InputError("dap_score: attribute prior must be in (0, 1), got " +
                       format_g17(prior));
    const double q = decisions[m] == Decision::kPositive
                         ? posterior_row[m]
                         : 1.0 - posterior_row[m];
    log_score += std::log(q) - std::log(prior);
  }
  return log_score;
}

double dap_score(std::span<const Decision> decisions,
                 std::span<const double> posterior_row,
                 std::span<const double> priors) {
  return std::exp(dap_log_score(decisions, posterior_row, priors));
}

double dap_score(const AssociationPrediction& pred,
                 std::span<const double> posterior_row,
                 std::span<const double> priors) {
  return dap_score(std::span<const Decision>(pred.decisions), posterior_row,
                   priors);
}

namespace {

std::vector<std::string> classify_decisions(
    const std::vector<std::string>& class_names,
    const std::vector<std::vector<Decision>>& decisions,
    const PosteriorDataset& data) {
  if (class_names.empty())
    throw InputError("classify_zsl: need at least one unseen class");
  check_priors(data.attribute_prior);

  std::vector<std::string> predicted(data.n_images());
  par::parallel_for(data.n_images(), [&](std::size_t i) {
    const auto row = data.posteriors.row(i);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_z = 0;
    for (std::size_t z = 0; z < class_names.size(); ++z) {
      const double score =
          dap_log_score(decisions[z], row, data.attribute_prior);
      if (score > best) {
        best = score;
        best_z = z;
      }
    }
    predicted[i] = class_names[best_z];
  });
  return predicted;
}

}  // namespace

std::vector<std::string> classify_zsl(
    const std::vector<AssociationPrediction>& preds,
    const PosteriorDataset& data) {
  std::vector<std::string> names;
  std::vector<std::vector<Decision>> decisions;
  for (const auto& p : preds) {
    names.push_back(p.class_name);
    decisions.push_back(p.decisions);
  }
  return classify_decisions(names, decisions, data);
}

std::vector<std::string> classify_zsl_binary(
    const AssociationMatrix& assoc, const std::vector<std::string>& class_names,
    const PosteriorDataset& data) {
  if (assoc.n_classes != class_names.size())
    throw InputError("classify_zsl_binary: class count mismatch");
  std::vector<std::vector<Decision>> decisions(class_names.size());
  for (std::size_t z = 0; z < class_names.size(); ++z) {
    decisions[z].resize(assoc.n_attributes);
    for (std::size_t m = 0; m < assoc.n_attributes; ++m) {
      if (assoc.at(z, m) == Assoc::kUnknown)
        decisions[z][m] = Decision::kAbstain;
      else
        decisions[z][m] = assoc.at(z, m) == Assoc::kPositive
                              ? Decision::kPositive
                              : Decision::kNegative;
    }
  }
  return classify_decisions(class_names, decisions, data);
}

Matrix baseline_dice(const HitCountTable& table) {
  Matrix out(table.class_names.size(), table.attribute_names.size());
  for (std::size_t k = 0; k < out.rows(); ++k) {
    for (std::size_t m = 0; m < out.cols(); ++m) {
      const double denom = table.class_hits[k] + table.attr_hits[m];
      if (denom == 0.0) {
        std::cerr << "baseline_dice: H_class + H_attr = 0 for ("
                  << table.class_names[k] << ", " << table.attribute_names[m]
                  << "); score set to 0\n";
        out(k, m) = 0.0;
      } else {
        out(k, m) = table.pair_hits(k, m) / denom;
      }
    }
  }
  return out;
}

Matrix select_hit_scores(const Matrix& scores, const HitCountTable& table,
                         const std::vector<std::string>& class_names,
                         const std::vector<std::string>& attribute_names) {
  const auto cidx = name_index(table.class_names, "hit count classes");
  const auto aidx = name_index(table.attribute_names, "hit count attributes");
  Matrix out(class_names.size(), attribute_names.size());
  for (std::size_t k = 0; k < class_names.size(); ++k) {
    const auto ci = cidx.find(class_names[k]);
    if (ci == cidx.end())
      throw InputError("hit count table: missing class '" + class_names[k] +
                       "'");
    for (std::size_t m = 0; m < attribute_names.size(); ++m) {
      const auto ai = aidx.find(attribute_names[m]);
      if (ai == aidx.end())
        throw InputError("hit count table: missing attribute '" +
                         attribute_names[m] + "'");
      out(k, m) = scores(ci->second, ai->second);
    }
  }
  return out;
}

Matrix baseline_similarity(const EmbeddingTable& table,
                           const std::vector<std::string>& class_names,
                           const std::vector<std::string>& attribute_names) {
  Matrix out(class_names.size(), attribute_names.size());
  std::vector<std::vector<double>> attr_vecs;
  attr_vecs.reserve(attribute_names.size());
  for (const auto& a : attribute_names)
    attr_vecs.push_back(embed_phrase(table, a).vector);
  for (std::size_t k = 0; k < class_names.size(); ++k) {
    const auto cv = embed_phrase(table, class_names[k]).vector;
    for (std::size_t m = 0; m < attribute_names.size(); ++m)
      out(k, m) = std::exp(-euclidean_distance(cv, attr_vecs[m]));
  }
  return out;
}

AssociationMatrix top_q_associations(const Matrix& scores, std::size_t q) {
  if (q > scores.cols())
    throw InputError("top_q_associations: Q=" + std::to_string(q) +
                     " exceeds attribute count " +
                     std::to_string(scores.cols()));
  AssociationMatrix out(scores.rows(), scores.cols());
  std::vector<std::size_t> order(scores.cols());
  for (std::size_t k = 0; k < scores.rows(); ++k) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto row = scores.row(k);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return row[a] > row[b];
                     });
    for (std::size_t m = 0; m < scores.cols(); ++m)
      out.at(k, m) = Assoc::kNegative;
    for (std::size_t i = 0; i < q; ++i)
      out.at(k, order[i]) = Assoc::kPositive;
  }
  return out;
}

std::size_t average_positive_count(const AssociationMatrix& assoc,
                                   const ClassVocabulary& classes) {
  if (assoc.n_classes != classes.size())
    throw InputError("average_positive_count: dimension mismatch");
  std::size_t total = 0, rows = 0;
  for (std::size_t k = 0; k < assoc.n_classes; ++k) {
    if (!classes.seen[k]) continue;
    ++rows;
    for (std::size_t m = 0; m < assoc.n_attributes; ++m)
      if (assoc.at(k, m) == Assoc::kPositive) ++total;
  }
  if (rows == 0) throw InputError("average_positive_count: no seen classes");
  return static_cast<std::size_t>(std::lround(
      static_cast<double>(total) / static_cast<double>(rows)));
}

double best_threshold(const Matrix& calibration_scores,
                      const AssociationMatrix& calibration_truth) {
  if (calibration_scores.rows() != calibration_truth.n_classes ||
      calibration_scores.cols() != calibration_truth.n_attributes)
    throw InputError("best_threshold: dimension mismatch");
  std::vector<double> candidates = calibration_scores.data();
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  if (candidates.empty()) throw InputError("best_threshold: empty scores");

  double best_t = candidates.front();
  double best_acc = -1.0;
  for (const double t : candidates) {
    std::size_t known = 0, matched = 0;
    for (std::size_t k = 0; k < calibration_truth.n_classes; ++k) {
      for (std::size_t m = 0; m < calibration_truth.n_attributes; ++m) {
        const Assoc truth = calibration_truth.at(k, m);
        if (truth == Assoc::kUnknown) continue;
        ++known;
        const Assoc pred = calibration_scores(k, m) >= t ? Assoc::kPositive
                                                         : Assoc::kNegative;
        if (pred == truth) ++matched;
      }
    }
    const double acc =
        known ? static_cast<double>(matched) / static_cast<double>(known) : 0.0;
    // >= : among equal accuracies keep the larger (more conservative)
    // threshold; candidates are scanned ascending.
    if (acc >= best_acc) {
      best_acc = acc;
      best_t = t;
    }
  }
  return best_t;
}

AssociationMatrix threshold_associations(const Matrix& scores,
                                         double threshold) {
  AssociationMatrix out(scores.rows(), scores.cols());
  for (std::size_t k = 0; k < scores.rows(); ++k)
    for (std::size_t m = 0; m < scores.cols(); ++m)
      out.at(k, m) =
          scores(k, m) >= threshold ? Assoc::kPositive : Assoc::kNegative;
  return out;
}

namespace {

std::vector<double> phrase_vec(const EmbeddingTable& table,
                               const std::string& name) {
  return embed_phrase(table, name).vector;
}

}  // namespace

std::vector<std::string> baseline_nearest_class(
    const EmbeddingTable& table, const std::vector<std::string>& unseen,
    const ClassScoreDataset& class_scores) {
  if (unseen.empty())
    throw InputError("baseline_nearest_class: no unseen classes");
  std::vector<std::vector<double>> seen_vecs;
  for (const auto& name : class_scores.class_names)
    seen_vecs.push_back(phrase_vec(table, name));

  // Unseen class -> nearest seen class column.
  std::vector<std::size_t> proxy(unseen.size());
  for (std::size_t z = 0; z < unseen.size(); ++z) {
    const auto zv = phrase_vec(table, unseen[z]);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < seen_vecs.size(); ++k) {
      const double d = euclidean_distance(zv, seen_vecs[k]);
      if (d < best) {
        best = d;
        best_k = k;
      }
    }
    proxy[z] = best_k;
  }

  Matrix scores(class_scores.n_images(), unseen.size());
  for (std::size_t i = 0; i < class_scores.n_images(); ++i)
    for (std::size_t z = 0; z < unseen.size(); ++z)
      scores(i, z) = class_scores.scores(i, proxy[z]);
  return classify_from_scores(scores, unseen);
}

Matrix baseline_weighted_classes(const EmbeddingTable& table,
                                 const std::vector<std::string>& unseen,
                                 const ClassScoreDataset& class_scores) {
  if (unseen.empty())
    throw InputError("baseline_weighted_classes: no unseen classes");
  std::vector<std::vector<double>> seen_vecs;
  for (const auto& name : class_scores.class_names)
    seen_vecs.push_back(phrase_vec(table, name));

  Matrix weights(unseen.size(), seen_vecs.size());
  for (std::size_t z = 0; z < unseen.size(); ++z) {
    const auto zv = phrase_vec(table, unseen[z]);
    for (std::size_t k = 0; k < seen_vecs.size(); ++k)
      weights(z, k) = std::exp(-euclidean_distance(zv, seen_vecs[k]));
  }

  Matrix out(class_scores.n_images(), unseen.size());
  par::parallel_for(class_scores.n_images(), [&](std::size_t i) {
    const auto srow = class_scores.scores.row(i);
    for (std::size_t z = 0; z < unseen.size(); ++z)
      out(i, z) = dot(weights.row(z), srow);
  });
  return out;
}

std::vector<std::string> classify_from_scores(
    const Matrix& image_by_class_scores,
    const std::vector<std::string>& class_names) {
  if (image_by_class_scores.cols() != class_names.size())
    throw InputError("classify_from_scores: column/name count mismatch");
  std::vector<std::string> out(image_by_class_scores.rows());
  for (std::size_t i = 0; i < image_by_class_scores.rows(); ++i) {
    const auto row = image_by_class_scores.row(i);
    std::size_t best = 0;
    for (std::size_t z = 1; z < row.size(); ++z)
      if (row[z] > row[best]) best = z;
    out[i] = class_names[best];
  }
  return out;
}

}  // namespace attrel
