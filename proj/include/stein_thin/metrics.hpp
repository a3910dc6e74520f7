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
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Cholesky>

#include "stein_thin/error.hpp"
#include "stein_thin/kernel.hpp"
#include "stein_thin/parallel.hpp"
#include "stein_thin/types.hpp"

namespace stein_thin {

/// High-quality sample from the target, with the covariance that defines the
/// Mahalanobis norm |x|_S = |S^{-1/2} x| used by the energy distance.
/// Points are stored whitened (L^{-1} x with S = L L').
class ReferenceSample {
 public:
  static constexpr Index kDefaultCap = 100000;
  static constexpr std::uint64_t kSubsampleSeed = 20200807;

  /// Covariance estimated from the points themselves (N >= 2). When N
  /// exceeds `cap`, the cross term uses a seeded random subset of `cap`
  /// points; the covariance always uses all of them.
  static ReferenceSample from_points(const RowMatrix& points, Index cap = kDefaultCap) {
    if (points.rows() < 2) throw InputError("reference sample needs at least 2 points");
    const Matrix cov = sample_covariance(points);
    if (!detail::is_spd(cov)) throw ConfigError("reference covariance is singular");
    return with_sigma(points, cov, cap);
  }

  /// Caller-supplied covariance; Sigma = I recovers the plain Euclidean norm.
  static ReferenceSample with_sigma(const RowMatrix& points, const Matrix& sigma, Index cap = kDefaultCap) {
    if (points.rows() < 1) throw InputError("reference sample is empty");
    if (sigma.rows() != points.cols() || sigma.cols() != points.cols()) {
      throw InputError("reference covariance has the wrong dimension");
    }
    if (!detail::is_spd(sigma)) throw ConfigError("reference covariance is not positive definite");
    ReferenceSample ref;
    ref.sigma_ = sigma;
    ref.factor_.compute(sigma);
    RowMatrix used = points;
    if (cap > 0 && points.rows() > cap) {
      std::vector<Index> order(static_cast<std::size_t>(points.rows()));
      std::iota(order.begin(), order.end(), Index{0});
      std::mt19937_64 rng(kSubsampleSeed);
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(static_cast<std::size_t>(cap));
      std::sort(order.begin(), order.end());
      used.resize(cap, points.cols());
      for (Index r = 0; r < cap; ++r) used.row(r) = points.row(order[static_cast<std::size_t>(r)]);
    }
    ref.points_ = used;
    ref.whitened_ = ref.whiten(used);
    return ref;
  }

  Index size() const { return points_.rows(); }
  Index dimension() const { return points_.cols(); }
  const RowMatrix& points() const { return points_; }
  const Matrix& sigma() const { return sigma_; }
  const RowMatrix& whitened() const { return whitened_; }

  /// Rows mapped to L^{-1} x, so Euclidean distances there are Mahalanobis
  /// distances in the original coordinates.
  RowMatrix whiten(const RowMatrix& x) const {
    if (x.cols() != dimension()) throw InputError("dimension mismatch against the reference sample");
    const Matrix z = factor_.matrixL().solve(x.transpose());
    return z.transpose();
  }

 private:
  ReferenceSample() = default;

  RowMatrix points_;
  RowMatrix whitened_;
  Matrix sigma_;
  Eigen::LLT<Matrix> factor_;
};

namespace detail {

inline constexpr std::size_t kSumBlock = 256;

// sum_{i, j} |a_i - b_j| over rows. Each block of kSumBlock rows of `a` is
// summed sequentially and the block totals are added in block order, so the
// result does not depend on the number of workers.
inline double pairwise_distance_sum(const RowMatrix& a, const RowMatrix& b) {
  const auto n = static_cast<std::size_t>(a.rows());
  const std::size_t blocks = (n + kSumBlock - 1) / kSumBlock;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t blk = lo; blk < hi; ++blk) {
      double s = 0.0;
      const std::size_t end = std::min(n, (blk + 1) * kSumBlock);
      for (std::size_t i = blk * kSumBlock; i < end; ++i) {
        for (Index j = 0; j < b.rows(); ++j) s += (a.row(static_cast<Index>(i)) - b.row(j)).norm();
      }
      partial[blk] = s;
    }
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace detail

/// Energy distance between the selection and the target, up to the additive
/// constant that depends on the target only:
///   2/(m N) sum_j sum_k |y_k - x_j|_S - 1/m^2 sum_j sum_j' |x_j - x_j'|_S.
inline double energy_distance(const RowMatrix& selection, const ReferenceSample& reference) {
  if (selection.rows() < 1) throw InputError("energy distance of an empty selection");
  if (selection.cols() != reference.dimension()) {
    throw InputError("selection and reference dimensions differ");
  }
  const RowMatrix z = reference.whiten(selection);
  const double m = static_cast<double>(z.rows());
  const double n = static_cast<double>(reference.size());
  const double cross = detail::pairwise_distance_sum(z, reference.whitened());
  const double within = detail::pairwise_distance_sum(z, z);
  return 2.0 * cross / (m * n) - within / (m * m);
}

/// |mean(selection) - reference_mean| per coordinate.
inline Vector mean_error(const RowMatrix& selection, const Vector& reference_mean) {
  if (selection.rows() < 1) throw InputError("mean error of an empty selection");
  if (selection.cols() != reference_mean.size()) throw InputError("dimension mismatch in mean_error");
  const Vector mean = selection.colwise().mean().transpose();
  return (mean - reference_mean).cwiseAbs();
}

/// Weighted variant: |sum_i w_i x_i - reference_mean|.
inline Vector mean_error(const RowMatrix& selection, const Vector& weights, const Vector& reference_mean) {
  if (weights.size() != selection.rows()) throw InputError("weight length does not match selection");
  if (selection.cols() != reference_mean.size()) throw InputError("dimension mismatch in mean_error");
  const Vector mean = selection.transpose() * weights;
  return (mean - reference_mean).cwiseAbs();
}

}  // namespace stein_thin
