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

#include "attrel/eval_metrics.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "attrel/errors.hpp"
#include "attrel/io.hpp"

namespace attrel {

std::vector<std::size_t> ranking_order(const RankedPredictions& r) {
  if (r.scores.size() != r.labels.size())
    throw InputError("ranked predictions: scores/labels length mismatch");
  std::vector<std::size_t> order(r.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r.scores[a] > r.scores[b];
  });
  return order;
}

double average_precision(const RankedPredictions& r) {
  const auto order = ranking_order(r);
  std::size_t n_pos = 0;
  double sum = 0.0;
  for (std::size_t rank = 1; rank <= order.size(); ++rank) {
    if (r.labels[order[rank - 1]] != 0) {
      ++n_pos;
      sum += static_cast<double>(n_pos) / static_cast<double>(rank);
    }
  }
  if (n_pos == 0)
    throw InputError("average_precision: no positive labels");
  return sum / static_cast<double>(n_pos);
}

double mean_ap(const std::vector<RankedPredictions>& per_class) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    const bool has_pos =
        std::any_of(per_class[k].labels.begin(), per_class[k].labels.end(),
                    [](int l) { return l != 0; });
    if (!has_pos) {
      std::cerr << "mean_ap: class " << k
                << " has no positive labels; excluded\n";
      continue;
    }
    sum += average_precision(per_class[k]);
    ++counted;
  }
  if (counted == 0) throw InputError("mean_ap: no class has positive labels");
  return sum / static_cast<double>(counted);
}

double binary_accuracy(const AssociationMatrix& predicted,
                       const AssociationMatrix& truth) {
  if (predicted.n_classes != truth.n_classes ||
      predicted.n_attributes != truth.n_attributes)
    throw InputError("binary_accuracy: dimension mismatch");
  std::size_t known = 0, matched = 0;
  for (std::size_t k = 0; k < truth.n_classes; ++k) {
    for (std::size_t m = 0; m < truth.n_attributes; ++m) {
      if (truth.at(k, m) == Assoc::kUnknown) continue;
      ++known;
      if (predicted.at(k, m) == truth.at(k, m)) ++matched;
    }
  }
  if (known == 0) throw InputError("binary_accuracy: no known truth cells");
  return static_cast<double>(matched) / static_cast<double>(known);
}

std::vector<std::pair<std::string, double>> per_class_accuracy(
    const std::vector<std::string>& predicted,
    const std::vector<std::string>& truth) {
  if (predicted.size() != truth.size())
    throw InputError("per_class_accuracy: prediction/truth length mismatch");
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& [right, total] = counts[truth[i]];
    ++total;
    if (predicted[i] == truth[i]) ++right;
  }
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [name, rt] : counts) {
    if (rt.second == 0) {
      std::cerr << "per_class_accuracy: class '" << name
                << "' has no images; excluded\n";
      continue;
    }
    out.emplace_back(name, static_cast<double>(rt.first) /
                               static_cast<double>(rt.second));
  }
  return out;
}

double mean_per_class_accuracy(const std::vector<std::string>& predicted,
                               const std::vector<std::string>& truth) {
  const auto per_class = per_class_accuracy(predicted, truth);
  if (per_class.empty())
    throw InputError("mean_per_class_accuracy: no classes with images");
  double sum = 0.0;
  for (const auto& [name, acc] : per_class) {
    (void)name;
    sum += acc;
  }
  return sum / static_cast<double>(per_class.size());
}

PRCurve pr_curve(const RankedPredictions& r) {
  const auto order = ranking_order(r);
  std::size_t total_pos = 0;
  for (int l : r.labels)
    if (l != 0) ++total_pos;
  if (total_pos == 0) throw InputError("pr_curve: no positive labels");

  PRCurve curve;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (r.labels[order[i]] != 0) ++tp;
    const double score = r.scores[order[i]];
    // Emit one point per distinct threshold: wait until the last item
    // sharing this score.
    if (i + 1 < order.size() && r.scores[order[i + 1]] == score) continue;
    curve.points.push_back(
        {score, static_cast<double>(tp) / static_cast<double>(i + 1),
         static_cast<double>(tp) / static_cast<double>(total_pos)});
  }
  curve.ap = average_precision(r);
  return curve;
}

std::string pr_curve_tsv(const PRCurve& curve) {
  std::ostringstream out;
  out << "threshold\tprecision\trecall\n";
  for (const auto& p : curve.points)
    out << format_g17(p.threshold) << '\t' << format_g17(p.precision) << '\t'
        << format_g17(p.recall) << '\n';
  return out.str();
}

}  // namespace attrel
