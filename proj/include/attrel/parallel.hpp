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

// Thin OpenMP shim. Everything compiles and runs serially when OpenMP
// is unavailable.
//
// Reductions never use `omp reduction`: summation order would then depend
// on the thread count. Instead callers split work into fixed-size blocks,
// compute block partials in parallel, and merge them in block order. The
// result is bitwise independent of the number of threads.

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstddef>

namespace attrel::par {

inline bool enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// f(i) for i in [0, n), independent iterations, static schedule.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    f(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) f(i);
#endif
}

// Block size shared by every deterministic blocked reduction in the
// library. Part of the numeric contract: changing it changes the exact
// floating-point accumulation order.
inline constexpr std::size_t kReductionBlock = 64;

inline std::size_t block_count(std::size_t n) {
  return (n + kReductionBlock - 1) / kReductionBlock;
}

}  // namespace attrel::par
