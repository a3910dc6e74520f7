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
#include <random>
#include <vector>

#include "stein_thin/diagnostics.hpp"

using namespace stein_thin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vector iid_normal(Index n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

RowMatrix iid_rows(Index n, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  RowMatrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = g(rng);
  return x;
}

Vector ar1(Index n, double rho, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(1.0 - rho * rho));
  std::normal_distribution<double> g0(0.0, 1.0);
  Vector v(n);
  v(0) = g0(rng);
  for (Index i = 1; i < n; ++i) v(i) = rho * v(i - 1) + g(rng);
  return v;
}

// `ramp` points falling linearly from `top` to 0, then i.i.d. N(0, 1).
RowMatrix ramp_chain(Index ramp, double top, Index n, Index d, std::mt19937_64& rng) {
  RowMatrix x(ramp + n, d);
  for (Index i = 0; i < ramp; ++i) x.row(i).setConstant(top * (1.0 - static_cast<double>(i) / ramp));
  x.bottomRows(n) = iid_rows(n, d, rng);
  return x;
}

}  // namespace

TEST_CASE("GR hand example") {
  const std::vector<Vector> chains{Vector{{0.0, 2.0}}, Vector{{1.0, 3.0}}};
  CHECK_THAT(gr_rhat(chains), WithinAbs(std::sqrt(0.75), 1e-12));
}

TEST_CASE("degenerate chains") {
  const std::vector<Vector> flat{Vector::Constant(50, 2.0), Vector::Constant(50, 2.0)};
  CHECK_THROWS_AS(gr_rhat(flat), DegenerateError);
  CHECK_THROWS_AS(vk_rhat(flat), DegenerateError);
  const std::vector<Vector> one{Vector::Constant(50, 2.0)};
  CHECK_THROWS_AS(gr_rhat(one), InputError);
  const std::vector<Vector> short_chain{Vector::Ones(26)};
  CHECK_THROWS_AS(vk_rhat(short_chain), InputError);
}

TEST_CASE("GR on i.i.d. chains") {
  std::mt19937_64 rng(100);
  std::vector<Vector> chains;
  for (int l = 0; l < 4; ++l) chains.push_back(iid_normal(10000, rng));
  const double r = gr_rhat(chains);
  CHECK(r >= 0.99);
  CHECK(r <= 1.01);
}

TEST_CASE("lugsail batch means fixtures") {
  std::mt19937_64 rng(101);
  const double iid = lugsail_batch_means(iid_normal(100000, rng));
  CHECK(iid >= 0.8);
  CHECK(iid <= 1.2);

  Vector alt(100000);
  for (Index i = 0; i < alt.size(); ++i) alt(i) = i % 2 == 0 ? 1.0 : -1.0;
  CHECK(lugsail_batch_means(alt) < 0.1);

  const double a = lugsail_batch_means(ar1(100000, 0.9, rng));
  CHECK(a >= 0.5 * 19.0);
  CHECK(a <= 2.0 * 19.0);

  CHECK_THROWS_AS(lugsail_batch_means(Vector(Vector::Ones(26))), InputError);
  CHECK_NOTHROW(lugsail_batch_means(iid_normal(27, rng)));
}

TEST_CASE("batch means by hand") {
  // batches {1,3}, {5,7}: means 2 and 6, variance 8, times b = 2
  CHECK_THAT(batch_means(Vector{{1.0, 3.0, 5.0, 7.0, 100.0}}, 2), WithinAbs(16.0, 1e-14));
  RowMatrix m(4, 2);
  m << 1, 0, 3, 0, 5, 1, 7, 1;
  const Matrix bm = batch_means(m, 2);
  CHECK_THAT(bm(0, 0), WithinAbs(16.0, 1e-14));
  CHECK_THAT(bm(0, 1), WithinAbs(4.0, 1e-14));
  CHECK_THAT(bm(1, 1), WithinAbs(1.0, 1e-14));
}

TEST_CASE("VK diagnostic") {
  std::mt19937_64 rng(102);
  const std::vector<Vector> single{iid_normal(100000, rng)};
  const double r = vk_rhat(single);
  CHECK(r >= 0.999);
  CHECK(r <= 1.001);

  for (int L : {1, 3}) {
    std::vector<Vector> chains;
    for (int l = 0; l < L; ++l) chains.push_back(ar1(5000, 0.7, rng));
    const auto vk = vk_diagnostic(chains);
    const double n = 5000.0;
    CHECK_THAT(vk.rhat * vk.rhat - (n - 1.0) / n, WithinAbs(L / vk.ess, 1e-12));
    // direct ESS: L n s^2 / tau^2
    double s2 = 0.0, tau2 = 0.0;
    for (const auto& c : chains) {
      s2 += (c.array() - c.mean()).square().sum() / (n - 1.0);
      tau2 += lugsail_batch_means(c);
    }
    CHECK_THAT(vk.ess, WithinRel(L * n * s2 / tau2, 1e-10));
  }

  // antithetic input clamps the variance estimate, ESS infinite
  Vector alt(1000);
  for (Index i = 0; i < alt.size(); ++i) alt(i) = i % 2 == 0 ? 1.0 : -1.0;
  const std::vector<Vector> anti{alt};
  const auto vk = vk_diagnostic(anti);
  CHECK(std::isinf(vk.ess));
  CHECK_THAT(vk.rhat, WithinAbs(std::sqrt(999.0 / 1000.0), 1e-15));
}

TEST_CASE("R-hat is affine invariant") {
  std::mt19937_64 rng(103);
  std::vector<Vector> chains, scaled;
  for (int l = 0; l < 3; ++l) {
    chains.push_back(ar1(3000, 0.5, rng));
    scaled.push_back((chains.back().array() * -4.5 + 12.0).matrix());
  }
  CHECK_THAT(gr_rhat(scaled), WithinRel(gr_rhat(chains), 1e-12));
  CHECK_THAT(vk_rhat(scaled), WithinRel(vk_rhat(chains), 1e-12));

  std::vector<RowMatrix> mc, ms;
  const Matrix a{{2.0, 1.0}, {0.0, 0.5}};
  for (int l = 0; l < 3; ++l) {
    mc.push_back(iid_rows(2000, 2, rng));
    ms.push_back(mc.back() * a.transpose());
  }
  CHECK_THAT(multivariate_rhat(ms, RhatMethod::vk), WithinRel(multivariate_rhat(mc, RhatMethod::vk), 1e-12));
  CHECK_THAT(multivariate_rhat(ms, RhatMethod::gr), WithinRel(multivariate_rhat(mc, RhatMethod::gr), 1e-12));
}

TEST_CASE("multivariate R-hat") {
  std::mt19937_64 rng(104);
  // d = 1 matches the univariate statistic exactly
  std::vector<RowMatrix> one_d;
  std::vector<Vector> cols;
  for (int l = 0; l < 3; ++l) {
    cols.push_back(ar1(800, 0.4, rng));
    one_d.push_back(RowMatrix(cols.back()));
  }
  CHECK(multivariate_rhat(one_d, RhatMethod::vk) == vk_rhat(cols));
  CHECK(multivariate_rhat(one_d, RhatMethod::gr) == gr_rhat(cols));

  std::vector<RowMatrix> iid;
  for (int l = 0; l < 3; ++l) iid.push_back(iid_rows(100000, 4, rng));
  for (auto method : {RhatMethod::vk, RhatMethod::gr}) {
    const double r = multivariate_rhat(iid, method);
    CHECK(r >= 0.99);
    CHECK(r <= 1.01);
  }

  // independent slow random-walk drift in every coordinate
  RowMatrix drift = iid_rows(20000, 4, rng);
  std::normal_distribution<double> step(0.0, 0.02);
  Eigen::RowVectorXd level = Eigen::RowVectorXd::Zero(4);
  for (Index i = 0; i < drift.rows(); ++i) {
    for (Index j = 0; j < 4; ++j) level(j) += step(rng);
    drift.row(i) += level;
  }
  const std::vector<RowMatrix> d1{drift};
  CHECK(multivariate_rhat(d1, RhatMethod::vk) > 1.0 + threshold_delta(1, 0.05, 0.05, 4));

  RowMatrix collinear(100, 2);
  collinear.col(0) = iid_normal(100, rng);
  collinear.col(1) = collinear.col(0);
  const std::vector<RowMatrix> sing{collinear};
  CHECK_THROWS_AS(multivariate_rhat(sing, RhatMethod::vk), DegenerateError);
}

TEST_CASE("threshold delta reference values") {
  auto three_sig = [](double got, double want) { return std::abs(got - want) <= 0.5e-2 * want + 1e-18; };
  CHECK(three_sig(threshold_delta(6, 0.05, 0.05, 1), 4.88e-4));
  CHECK(three_sig(threshold_delta(5, 0.05, 0.05, 1), 4.07e-4));
  CHECK(three_sig(threshold_delta(1, 0.05, 0.05, 1), 8.13e-5));
  CHECK(three_sig(threshold_delta(6, 0.05, 0.05, 4), 3.56e-4));
  CHECK(three_sig(threshold_delta(5, 0.05, 0.05, 4), 2.96e-4));
  CHECK(three_sig(threshold_delta(1, 0.05, 0.05, 4), 5.93e-5));
  // d = 1 constant is 4
  CHECK_THAT(minimum_ess(0.05, 0.05, 1), WithinRel(4.0 * 3.841458820694124 / 0.0025, 1e-12));
}

TEST_CASE("threshold delta monotonicity") {
  for (Index d = 1; d <= 38; ++d) {
    for (Index L = 1; L <= 10; ++L) {
      const double base = threshold_delta(L, 0.05, 0.05, d);
      CHECK(base > 0.0);
      if (L < 10) CHECK(threshold_delta(L + 1, 0.05, 0.05, d) > base);
      CHECK(threshold_delta(L, 0.05, 0.06, d) > base);
    }
  }
  // The minimum ESS peaks at d = 11, so delta falls with d up to 11 and
  // rises slowly afterwards.
  for (Index L = 1; L <= 10; ++L) {
    for (Index d = 1; d < 11; ++d) CHECK(threshold_delta(L, 0.05, 0.05, d + 1) < threshold_delta(L, 0.05, 0.05, d));
    for (Index d = 11; d < 38; ++d) CHECK(threshold_delta(L, 0.05, 0.05, d + 1) > threshold_delta(L, 0.05, 0.05, d));
  }
  CHECK_THAT(minimum_ess(0.05, 0.05, 10), WithinRel(8830.6, 1e-4));
  CHECK_THAT(minimum_ess(0.05, 0.05, 38), WithinRel(8460.6, 1e-4));
}

TEST_CASE("burn-in on stationary chains is the first stride") {
  std::mt19937_64 rng(105);
  std::vector<RowMatrix> chains;
  for (int l = 0; l < 2; ++l) chains.push_back(iid_rows(60000, 2, rng));
  for (auto variant : {RhatVariant::multivariate, RhatVariant::univariate_max}) {
    const auto rep = estimate_burn_in(chains, RhatMethod::vk, variant, 0.05, 0.05, 20000);
    CHECK(rep.status == BurnInStatus::reached);
    REQUIRE(rep.burn_in);
    CHECK(*rep.burn_in == 20000);
    CHECK(rep.rhat_series.size() == 3);
    CHECK(rep.delta > 0.0);
  }
}

TEST_CASE("burn-in after a deterministic ramp") {
  std::mt19937_64 rng(106);
  const Index ramp = 3000;
  const std::vector<RowMatrix> chains{ramp_chain(ramp, 6.0, 150000, 2, rng)};
  const auto rep = estimate_burn_in(chains, RhatMethod::vk, RhatVariant::multivariate, 0.05, 0.05, 1000);
  REQUIRE(rep.status == BurnInStatus::reached);
  CHECK(*rep.burn_in > ramp);
  for (const auto& [end, r] : rep.rhat_series) {
    if (end <= ramp) CHECK(r >= 1.0 + rep.delta);
  }
}

TEST_CASE("univariate-max takes the latest coordinate") {
  std::mt19937_64 rng(107);
  RowMatrix x = iid_rows(153000, 2, rng);
  const Index ramp = 3000;
  for (Index i = 0; i < ramp; ++i) x(i, 1) = 6.0 * (1.0 - static_cast<double>(i) / ramp);
  const std::vector<RowMatrix> chains{x};
  const auto rep = estimate_burn_in(chains, RhatMethod::vk, RhatVariant::univariate_max, 0.05, 0.05, 1000);
  REQUIRE(rep.status == BurnInStatus::reached);
  REQUIRE(rep.coordinate_burn_in.size() == 2);
  REQUIRE(rep.coordinate_burn_in[0]);
  REQUIRE(rep.coordinate_burn_in[1]);
  CHECK(*rep.coordinate_burn_in[1] > ramp);
  CHECK(*rep.burn_in == std::max(*rep.coordinate_burn_in[0], *rep.coordinate_burn_in[1]));
}

TEST_CASE("burn-in status outcomes") {
  const std::vector<RowMatrix> flat{RowMatrix::Constant(500, 2, 1.0)};
  const auto rep = estimate_burn_in(flat, RhatMethod::vk, RhatVariant::multivariate, 0.05, 0.05, 100);
  CHECK(rep.status == BurnInStatus::not_evaluable);
  CHECK(!rep.burn_in);
  CHECK(to_string(rep.status) == "not evaluable");

  // strongly autocorrelated: the ESS stays far below the required minimum
  std::mt19937_64 rng(108);
  RowMatrix slow(2000, 2);
  slow.col(0) = ar1(2000, 0.95, rng);
  slow.col(1) = ar1(2000, 0.95, rng);
  const std::vector<RowMatrix> shortc{slow.topRows(500)};
  const auto nr = estimate_burn_in(shortc, RhatMethod::vk, RhatVariant::multivariate, 0.05, 0.05, 100);
  CHECK(nr.status == BurnInStatus::not_reached);
  CHECK(nr.rhat_series.size() == 5);

  CHECK_THROWS_AS(estimate_burn_in(shortc, RhatMethod::vk, RhatVariant::multivariate, 0.05, 0.05, 0), InputError);
  CHECK_THROWS_AS(estimate_burn_in(shortc, RhatMethod::gr, RhatVariant::multivariate, 0.05, 0.05, 10), InputError);
}
