// Copyright 2026 The stein_thin Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace stein_thin {

// Worker count: STEIN_THIN_THREADS if set to a positive integer, otherwise
// the hardware concurrency.
inline std::size_t thread_count() {
  if (const char* env = std::getenv("STEIN_THIN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace detail {
// Below this many items work runs on the calling thread.
inline constexpr std::size_t kParallelGrain = 2048;

inline std::size_t chunks_for(std::size_t n) {
  const std::size_t by_grain = (n + kParallelGrain - 1) / kParallelGrain;
  return std::max<std::size_t>(1, std::min(thread_count(), by_grain));
}
}  // namespace detail

// Calls body(begin, end) on contiguous, disjoint ranges covering [0, n).
// The partition depends only on n and the worker count; callers must make
// each element's result independent of the partition.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t chunks = detail::chunks_for(n);
  if (chunks <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  const std::size_t step = (n + chunks - 1) / chunks;
  for (std::size_t c = 1; c < chunks; ++c) {
    const std::size_t lo = std::min(n, c * step);
    const std::size_t hi = std::min(n, lo + step);
    workers.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  body(std::size_t{0}, std::min(n, step));
  for (auto& w : workers) w.join();
}

struct ArgMin {
  std::size_t index = 0;
  double value = std::numeric_limits<double>::infinity();
};

// Smallest value of f(i) over [0, n). Ties go to the smaller index at every
// merge, so the answer is the same for any worker count.
template <typename F>
ArgMin parallel_argmin(std::size_t n, F&& f) {
  const std::size_t chunks = detail::chunks_for(n);
  std::vector<ArgMin> partial(chunks);
  const std::size_t step = (n + chunks - 1) / chunks;
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    if (lo >= hi) return;
    ArgMin best{lo, f(lo)};
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double v = f(i);
      if (v < best.value) best = {i, v};
    }
    partial[lo / step] = best;
  });
  // Pairwise tree merge in chunk order.
  for (std::size_t width = 1; width < chunks; width *= 2) {
    for (std::size_t i = 0; i + width < chunks; i += 2 * width) {
      const ArgMin& a = partial[i];
      const ArgMin& b = partial[i + width];
      if (b.value < a.value || (b.value == a.value && b.index < a.index)) partial[i] = b;
    }
  }
  return partial.empty() ? ArgMin{} : partial[0];
}

}  // namespace stein_thin
