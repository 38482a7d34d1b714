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

#include <string>
#include <vector>

#include "attrel/relation_schema.hpp"

namespace attrel {

struct RankedPredictions {
  std::vector<double> scores;
  std::vector<int> labels;  // 0/1, parallel to scores
};

struct PRPoint {
  double threshold;
  double precision;
  double recall;
};

struct PRCurve {
  std::vector<PRPoint> points;  // descending threshold, recall non-decreasing
  double ap = 0.0;
};

// Items ranked by descending score, ties by original index. Indices used
// throughout the module: rank r is 1-based.
std::vector<std::size_t> ranking_order(const RankedPredictions& r);

// Non-interpolated AP: mean of precision-at-each-positive over the ranking.
// Requires at least one positive label.
double average_precision(const RankedPredictions& r);

// Unweighted mean AP over classes; classes without positives are excluded
// with a warning on stderr. Errors when nothing remains.
double mean_ap(const std::vector<RankedPredictions>& per_class);

// Fraction of matching cells, counted over known truth cells only.
double binary_accuracy(const AssociationMatrix& predicted,
                       const AssociationMatrix& truth);

// Unweighted mean over classes of per-class accuracy. Class set comes from
// the truth labels, processed in sorted name order.
double mean_per_class_accuracy(const std::vector<std::string>& predicted,
                               const std::vector<std::string>& truth);

// Per-class accuracies keyed by class name (sorted).
std::vector<std::pair<std::string, double>> per_class_accuracy(
    const std::vector<std::string>& predicted,
    const std::vector<std::string>& truth);

// One point per distinct score, swept descending: predict positive at
// score >= threshold.
PRCurve pr_curve(const RankedPredictions& r);

// TSV "threshold<TAB>precision<TAB>recall".
std::string pr_curve_tsv(const PRCurve& curve);

}  // namespace attrel
