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

#include <cmath>

#include "attrel/errors.hpp"
#include "attrel/factor_model.hpp"
#include "attrel/rng.hpp"
#include "testutil.hpp"

using namespace attrel;

TEST_CASE("project_l1 axis, interior and boundary cases") {
  const auto axis = project_l1(std::vector<double>{3.0, 0.0}, 1.0);
  CHECK(axis == std::vector<double>{1.0, 0.0});

  const std::vector<double> interior{0.3, -0.2};
  CHECK(project_l1(interior, 1.0) == interior);

  const auto mixed = project_l1(std::vector<double>{2.0, 1.0}, 2.0);
  REQUIRE(mixed.size() == 2);
  CHECK(mixed[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(mixed[1] == doctest::Approx(0.5).epsilon(1e-12));

  // Signs are restored.
  const auto negs = project_l1(std::vector<double>{-2.0, 1.0}, 2.0);
  CHECK(negs[0] == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(negs[1] == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(project_l1(interior, 0.0), InputError);
  CHECK_THROWS_AS(project_l1(interior, -1.0), InputError);
}

TEST_CASE("project_l1 matches the KKT bisection oracle on random vectors") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const double lambda = (trial % 3 == 0) ? 0.5 : (trial % 3 == 1 ? 1.0 : 2.0);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-3.0, 3.0);

    const auto got = project_l1(v, lambda);
    const auto want = testutil::project_l1_oracle(v, lambda);
    REQUIRE(got.size() == want.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::fabs(got[i] - want[i]) <= 1e-6);
      l1 += std::fabs(got[i]);
    }
    CHECK(l1 <= lambda + 1e-9);
  }
}
