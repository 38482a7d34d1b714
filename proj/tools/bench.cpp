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

// Benchmarks the OpenMP kernels against their serial reference
// implementations on a synthetic workload and reports the speedup plus the
// largest observed deviation.
//
// Usage: attrel_bench [repeats]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "attrel/kernels.hpp"
#include "attrel/parallel.hpp"
#include "attrel/rng.hpp"

using namespace attrel;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
  fn();  // warm up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() /
         repeats;
}

double max_abs_diff(const Gradients& a, const Gradients& b) {
  double worst = 0.0;
  auto scan = [&](const Matrix& x, const Matrix& y) {
    for (std::size_t i = 0; i < x.data().size(); ++i)
      worst = std::max(worst, std::fabs(x.data()[i] - y.data()[i]));
  };
  for (std::size_t l = 0; l < a.d_factors.size(); ++l)
    scan(a.d_factors[l], b.d_factors[l]);
  scan(a.d_mixing, b.d_mixing);
  scan(a.d_attr, b.d_attr);
  return worst;
}

void report(const char* name, double serial_ms, double parallel_ms,
            double deviation) {
  std::printf("%-22s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   "
              "max dev %.3e\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms,
              deviation);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;

  const std::size_t d = 48, n_rel = 8, n_fac = 8, n_classes = 300,
                    n_attrs = 150;
  Rng rng(2718);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  FactorizedRelationModel model;
  model.dim = d;
  model.n_relations = n_rel;
  model.n_factors = n_fac;
  model.lambda = 2.0;
  model.class_embeddings = Matrix(n_classes, d);
  model.attr_embeddings = Matrix(n_attrs, d);
  for (auto& v : model.class_embeddings.data()) v = rng.gaussian() * scale;
  for (auto& v : model.attr_embeddings.data()) v = rng.gaussian() * scale;
  for (std::size_t l = 0; l < n_fac; ++l) {
    Matrix t(d, d);
    for (auto& v : t.data()) v = rng.gaussian() * 0.2;
    model.factors.push_back(std::move(t));
  }
  model.mixing = Matrix(n_rel, n_fac);
  for (auto& v : model.mixing.data()) v = rng.uniform(-0.25, 0.25);

  std::vector<kernels::LabeledTriplet> batch;
  for (std::size_t i = 0; i < 8192; ++i) {
    const std::size_t m = rng.below(n_attrs);
    batch.push_back({{rng.below(n_rel), rng.below(n_classes), m},
                     rng.uniform() < 0.5});
  }

  std::printf("threads: %d (OpenMP %s)\n", par::max_threads(),
              par::enabled() ? "on" : "off");

  {
    Gradients par_grads, ser_grads;
    const double par_ms = time_ms(
        [&] { par_grads = kernels::accumulate_batch(model, batch, true).grads; },
        repeats);
    const double ser_ms = time_ms(
        [&] {
          ser_grads =
              kernels::reference::accumulate_batch(model, batch, true).grads;
        },
        repeats);
    report("gradient batch", ser_ms, par_ms, max_abs_diff(par_grads, ser_grads));
  }

  {
    double par_v = 0, ser_v = 0;
    const double par_ms =
        time_ms([&] { par_v = kernels::nll_sum(model, batch); }, repeats);
    const double ser_ms = time_ms(
        [&] { ser_v = kernels::reference::nll_sum(model, batch); }, repeats);
    report("nll sum", ser_ms, par_ms, std::fabs(par_v - ser_v));
  }

  {
    Matrix par_m, ser_m;
    const double par_ms = time_ms(
        [&] {
          for (std::size_t k = 0; k < 32; ++k)
            par_m = kernels::score_matrix(model, model.class_embeddings.row(k));
        },
        repeats);
    const double ser_ms = time_ms(
        [&] {
          for (std::size_t k = 0; k < 32; ++k)
            ser_m = kernels::reference::score_matrix(
                model, model.class_embeddings.row(k));
        },
        repeats);
    double dev = 0.0;
    for (std::size_t i = 0; i < par_m.data().size(); ++i)
      dev = std::max(dev, std::fabs(par_m.data()[i] - ser_m.data()[i]));
    report("score matrix x32", ser_ms, par_ms, dev);
  }

  return 0;
}
