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

#include <span>
#include <string>
#include <vector>

#include "attrel/association_predictor.hpp"
#include "attrel/embedding_store.hpp"
#include "attrel/matrix.hpp"
#include "attrel/relation_schema.hpp"

namespace attrel {

// Per-image attribute posteriors p(a_m | x) plus ground-truth class labels.
struct PosteriorDataset {
  std::vector<std::string> image_ids;
  std::vector<std::string> true_class;
  Matrix posteriors;                    // images x M, in [0, 1]
  std::vector<double> attribute_prior;  // p(a_m), each in (0, 1)

  std::size_t n_images() const { return image_ids.size(); }
};

// Seen-class classifier scores s(c_k | x) per image.
struct ClassScoreDataset {
  std::vector<std::string> image_ids;
  std::vector<std::string> true_class;
  std::vector<std::string> class_names;  // seen-class columns
  Matrix scores;                         // images x K

  std::size_t n_images() const { return image_ids.size(); }
};

// Web hit counts for classes, attributes and class-attribute pairs.
// H_pair <= min(H_class, H_attr) is deliberately not enforced.
struct HitCountTable {
  std::vector<std::string> class_names;
  std::vector<std::string> attribute_names;
  std::vector<double> class_hits;
  std::vector<double> attr_hits;
  Matrix pair_hits;
};

// TSV "image_id<TAB>class<TAB>attr..<TAB>attr"; attribute columns are mapped
// by name onto `attrs` order. Every attribute of the vocabulary must appear.
PosteriorDataset load_posterior_file(const std::string& path,
                                     const AttributeVocabulary& attrs,
                                     double attribute_prior = 0.5);

// TSV "image_id<TAB>class<TAB>seen-class columns".
ClassScoreDataset load_class_score_file(const std::string& path);

// TSV "class<TAB>attribute<TAB>h_class<TAB>h_attr<TAB>h_pair" (header
// optional). Negative counts and conflicting repeated counts are errors.
HitCountTable load_hit_count_file(const std::string& path);

// Product over decided attributes of q_m / p(a_m), q_m = p(a_m|x) for a
// positive decision and 1 - p(a_m|x) for a negative one; abstained
// attributes are skipped. Accumulated in log space; empty decided set
// gives 1.
double dap_score(std::span<const Decision> decisions,
                 std::span<const double> posterior_row,
                 std::span<const double> priors);
double dap_log_score(std::span<const Decision> decisions,
                     std::span<const double> posterior_row,
                     std::span<const double> priors);
double dap_score(const AssociationPrediction& pred,
                 std::span<const double> posterior_row,
                 std::span<const double> priors);

// Per image, the unseen class maximizing the DAP score; ties go to the
// smaller class index. Parallel across images.
std::vector<std::string> classify_zsl(
    const std::vector<AssociationPrediction>& preds,
    const PosteriorDataset& data);

// Same with hard binary associations (rows of `assoc`, one per class in
// `class_names`): every attribute is decided, none abstain.
std::vector<std::string> classify_zsl_binary(
    const AssociationMatrix& assoc, const std::vector<std::string>& class_names,
    const PosteriorDataset& data);

// Dice co-occurrence scores H_pair / (H_class + H_attr) over the table's own
// class/attribute order; zero denominators score 0 with a warning.
Matrix baseline_dice(const HitCountTable& table);

// Reindex a score matrix from the table's names to the requested ones.
Matrix select_hit_scores(const Matrix& scores, const HitCountTable& table,
                         const std::vector<std::string>& class_names,
                         const std::vector<std::string>& attribute_names);

// exp(-||v(c) - v(a)||_2) for every class/attribute name pair.
Matrix baseline_similarity(const EmbeddingTable& table,
                           const std::vector<std::string>& class_names,
                           const std::vector<std::string>& attribute_names);

// Per class, the Q highest-scoring attributes become positive (ties by
// column index); everything else negative.
AssociationMatrix top_q_associations(const Matrix& scores, std::size_t q);

// Mean positives per seen class of `assoc`, rounded to nearest integer.
std::size_t average_positive_count(const AssociationMatrix& assoc,
                                   const ClassVocabulary& classes);

// Scalar threshold from the calibration matrix values maximizing binary
// accuracy against the calibration truth (predict positive at score >= t);
// ties prefer the larger threshold.
double best_threshold(const Matrix& calibration_scores,
                      const AssociationMatrix& calibration_truth);

AssociationMatrix threshold_associations(const Matrix& scores,
                                         double threshold);

// Images classified with the single seen-class classifier nearest to each
// unseen class in embedding space.
std::vector<std::string> baseline_nearest_class(
    const EmbeddingTable& table, const std::vector<std::string>& unseen,
    const ClassScoreDataset& class_scores);

// s_wc(z|x) = sum_k exp(-||v(z) - v(c_k)||) * s(c_k|x); returns
// images x unseen score matrix.
Matrix baseline_weighted_classes(const EmbeddingTable& table,
                                 const std::vector<std::string>& unseen,
                                 const ClassScoreDataset& class_scores);

// argmax over columns, ties to the smaller index.
std::vector<std::string> classify_from_scores(
    const Matrix& image_by_class_scores,
    const std::vector<std::string>& class_names);

}  // namespace attrel
