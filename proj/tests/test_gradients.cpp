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

#include <doctest.h>

#include "attrel/factor_model.hpp"
#include "testutil.hpp"

using namespace attrel;

namespace {

// Small random configuration; the acceptance suite runs the full sweep, this
// keeps a fast version in the unit tests.
testutil::SyntheticFixture small_fixture(std::uint64_t seed, std::size_t d,
                                         std::size_t n, std::size_t l) {
  testutil::SyntheticOptions opt;
  opt.dim = d;
  opt.n_relations = n;
  opt.n_factors = l;
  opt.n_classes = 6;
  opt.n_seen = 5;
  opt.n_attrs = 6;
  opt.lambda = 1.5;
  opt.seed = seed;
  return testutil::make_synthetic(opt);
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  const struct {
    std::size_t d, n, l;
  } configs[] = {{4, 1, 1}, {4, 3, 4}, {8, 1, 4}, {8, 3, 1}};
  std::uint64_t seed = 100;
  for (const auto& c : configs) {
    const auto fx = small_fixture(seed++, c.d, c.n, c.l);
    TrainConfig cfg;
    cfg.n_factors = c.l;
    cfg.lambda = 1.5;
    cfg.seed = seed;
    auto model = testutil::init_fixture_model(fx, cfg);
    const auto data =
        build_triplets(fx.dataset.assoc, fx.dataset.schema, fx.dataset.classes);

    const auto check = testutil::finite_difference_check(model, data, true);
    CAPTURE(c.d);
    CAPTURE(c.n);
    CAPTURE(c.l);
    CHECK(check.max_rel_error <= 1e-4);
    CHECK(check.params_checked ==
          c.l * c.d * c.d + c.n * c.l + 6 * c.d);
  }
}

TEST_CASE("gradient check also holds with frozen attribute embeddings") {
  const auto fx = small_fixture(55, 4, 2, 2);
  TrainConfig cfg;
  cfg.n_factors = 2;
  cfg.lambda = 1.5;
  auto model = testutil::init_fixture_model(fx, cfg);
  const auto data =
      build_triplets(fx.dataset.assoc, fx.dataset.schema, fx.dataset.classes);
  const auto check = testutil::finite_difference_check(model, data, false);
  CHECK(check.max_rel_error <= 1e-4);
}
