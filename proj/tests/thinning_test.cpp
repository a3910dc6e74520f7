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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <random>
#include <set>

#include "oracles.hpp"
#include "stein_thin/thinning.hpp"
#include "stein_thin/weights.hpp"

using namespace stein_thin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Random instance; some rows are duplicated to force exact ties.
Chain random_instance(std::mt19937_64& rng, Index n, Index d, bool with_duplicates) {
  RowMatrix x = oracle::random_rows(n, d, rng, 1.5);
  if (with_duplicates && n >= 4) {
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (int k = 0; k < n / 3; ++k) x.row(pick(rng)) = x.row(pick(rng)).eval();
  }
  return oracle::gaussian_chain(x);
}

}  // namespace

TEST_CASE("single candidate is selected repeatedly") {
  const Chain c(RowMatrix{{0.4, -0.3}}, RowMatrix{{-0.4, 0.3}});
  const auto cfg = SteinKernelConfig::identity(2);
  const auto res = greedy_thin(c, cfg, 6);
  CHECK(res.indices == std::vector<Index>(6, 0));
  const double k00 = oracle::kp(c, 0, 0, cfg);
  for (double v : res.ksd_trajectory) CHECK_THAT(v, WithinRel(std::sqrt(k00), 1e-12));
}

TEST_CASE("first selection minimises the diagonal") {
  // k_P(x, x) = d + |x|^2 for a standard Gaussian with gamma = I.
  const RowMatrix x{{2.0, 0.0}, {0.0, 1.0}, {3.0, 3.0}};
  const Chain c = oracle::gaussian_chain(x);
  const auto cfg = SteinKernelConfig::identity(2);
  for (Index i = 0; i < 3; ++i) CHECK_THAT(oracle::kp(c, i, i, cfg), WithinRel(2.0 + x.row(i).squaredNorm(), 1e-14));
  const auto res = greedy_thin(c, cfg, 1);
  CHECK(res.indices.front() == 1);
  CHECK_THAT(res.objective.front(), WithinRel(1.5, 1e-14));
  CHECK_THAT(res.ksd_trajectory.front(), WithinRel(std::sqrt(3.0), 1e-14));
}

TEST_CASE("greedy selection matches the brute-force algorithm") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<Index> n_dist(1, 50), m_dist(1, 20), d_dist(1, 4);
  for (int rep = 0; rep < 60; ++rep) {
    const Index n = rep < 5 ? rep + 1 : n_dist(rng);
    const Index m = m_dist(rng);
    const Index d = d_dist(rng);
    const Chain c = random_instance(rng, n, d, rep % 2 == 0);
    const auto cfg = rep % 3 == 0 ? SteinKernelConfig::make(oracle::random_spd(d, rng))
                                  : build_preconditioner(n >= 2 ? Preconditioner::med : Preconditioner::identity,
                                                         c.samples(), m);
    const auto res = greedy_thin(c, cfg, m);
    CHECK(res.indices == oracle::brute_force_greedy(c, cfg, m));
  }
}

TEST_CASE("exact ties go to the smallest index") {
  const RowMatrix x{{1.0, 1.0}, {0.5, 0.0}, {0.5, 0.0}, {0.5, 0.0}};
  const Chain c = oracle::gaussian_chain(x);
  const auto res = greedy_thin(c, SteinKernelConfig::identity(2), 1);
  CHECK(res.indices.front() == 1);
}

TEST_CASE("cached trajectory agrees with recomputation") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const Chain c = random_instance(rng, 40, 3, rep % 2 == 1);
    const auto cfg = build_preconditioner(Preconditioner::med, c.samples(), 15);
    const auto res = greedy_thin(c, cfg, 15);
    for (std::size_t j = 0; j < res.indices.size(); ++j) {
      const std::vector<Index> prefix(res.indices.begin(), res.indices.begin() + static_cast<long>(j) + 1);
      CHECK_THAT(res.ksd_trajectory[j], WithinRel(oracle::brute_force_ksd(c, prefix, cfg), 1e-10));
      CHECK_THAT(res.ksd_trajectory[j], WithinRel(ksd(c, prefix, cfg), 1e-10));
    }
    CHECK(error_bound_factor(res) == res.ksd_trajectory.back());
    CHECK_THAT(error_bound_factor(res), WithinRel(ksd(c, res.indices, cfg), 1e-10));
  }
}

TEST_CASE("m larger than n produces repeats") {
  std::mt19937_64 rng(8);
  const Chain c = random_instance(rng, 3, 2, false);
  const auto cfg = SteinKernelConfig::identity(2);
  const auto res = greedy_thin(c, cfg, 5);
  const std::set<Index> distinct(res.indices.begin(), res.indices.end());
  CHECK(res.indices.size() - distinct.size() >= 2);
  CHECK_THAT(res.ksd_trajectory.back(), WithinRel(oracle::brute_force_ksd(c, res.indices, cfg), 1e-10));
}

TEST_CASE("ksd on small subsets") {
  std::mt19937_64 rng(10);
  const Chain c = random_instance(rng, 12, 3, false);
  const auto cfg = SteinKernelConfig::make(oracle::random_spd(3, rng));
  CHECK_THAT(ksd(c, {4}, cfg), WithinRel(std::sqrt(oracle::kp(c, 4, 4, cfg)), 1e-14));
  CHECK_THAT(ksd(c, {4, 4}, cfg), WithinRel(std::sqrt(oracle::kp(c, 4, 4, cfg)), 1e-14));
  for (int rep = 0; rep < 10; ++rep) {
    std::uniform_int_distribution<Index> pick(0, 11);
    std::vector<Index> idx;
    for (int k = 0; k < 5; ++k) idx.push_back(pick(rng));
    CHECK_THAT(ksd(c, idx, cfg), WithinRel(oracle::brute_force_ksd(c, idx, cfg), 1e-12));
  }
  CHECK_THROWS_AS(ksd(c, std::vector<Index>{}, cfg), InputError);
}

TEST_CASE("m = 0 is rejected") {
  std::mt19937_64 rng(1);
  const Chain c = random_instance(rng, 5, 2, false);
  CHECK_THROWS_AS(greedy_thin(c, SteinKernelConfig::identity(2), 0), InputError);
}

TEST_CASE("non-finite chain entries are rejected at construction") {
  RowMatrix g{{0.0, 1.0}, {std::nan(""), 0.0}};
  CHECK_THROWS_AS(Chain(RowMatrix::Zero(2, 2), g), InputError);
  CHECK_THROWS_AS(Chain(RowMatrix::Zero(2, 2), RowMatrix::Zero(3, 2)), InputError);
}

TEST_CASE("standard thinning counts") {
  CHECK(standard_thin(10, 0, 1).size() == 10);
  CHECK(standard_thin(10, 0, 1).front() == 0);
  CHECK(standard_thin(10, 0, 1).back() == 9);
  CHECK(standard_thin(10, 4, 2) == std::vector<Index>{5, 7, 9});
  CHECK(standard_thin(7, 2, 3) == std::vector<Index>{4});
  CHECK_THROWS_AS(standard_thin(5, 5, 1), InputError);
  CHECK_THROWS_AS(standard_thin(5, 0, 0), InputError);
}

TEST_CASE("greedy output does not depend on the thread count") {
  std::mt19937_64 rng(99);
  const Chain c = oracle::gaussian_chain(oracle::random_rows(6000, 2, rng));
  const auto cfg = build_preconditioner(Preconditioner::med, c.samples(), 30);
  ::setenv("STEIN_THIN_THREADS", "1", 1);
  const auto serial = greedy_thin(c, cfg, 30);
  ::setenv("STEIN_THIN_THREADS", "7", 1);
  const auto parallel = greedy_thin(c, cfg, 30);
  ::unsetenv("STEIN_THIN_THREADS");
  CHECK(serial.indices == parallel.indices);
  CHECK(serial.ksd_trajectory == parallel.ksd_trajectory);
}

TEST_CASE("thinned KSD respects the greedy bound against optimal weights") {
  std::mt19937_64 rng(123);
  for (int rep = 0; rep < 5; ++rep) {
    const Index n = 30 + 10 * rep;
    const Index m = 10 + 5 * rep;
    const Chain c = random_instance(rng, n, 2, false);
    const auto cfg = build_preconditioner(Preconditioner::med, c.samples(), m);
    const auto res = greedy_thin(c, cfg, m);
    const Matrix gram = stein_gram(c, cfg);
    const auto w = simplex_weights_from_gram(gram);
    const double bound = w.ksd * w.ksd + (1.0 + std::log(static_cast<double>(m))) / static_cast<double>(m) *
                                               gram.diagonal().maxCoeff();
    const double thinned = res.ksd_trajectory.back();
    CHECK(thinned * thinned <= bound + 1e-6);
  }
}
