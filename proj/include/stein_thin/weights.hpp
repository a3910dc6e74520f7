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
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "stein_thin/chain.hpp"
#include "stein_thin/error.hpp"
#include "stein_thin/kernel.hpp"
#include "stein_thin/thinning.hpp"

namespace stein_thin {

enum class WeightConstraint { simplex, sum_to_one };

struct WeightVector {
  Vector values;
  WeightConstraint constraint = WeightConstraint::simplex;
  double ksd = 0.0;
  int solver_iterations = 0;  // 0 for the closed form
  bool converged = true;
};

/// sqrt(w' K w), floored at zero.
inline double weighted_ksd(const Vector& w, const Matrix& gram) {
  if (gram.rows() != gram.cols() || w.size() != gram.rows()) {
    throw InputError("weight length does not match Gram matrix size");
  }
  return std::sqrt(std::max(0.0, w.dot(gram * w)));
}

inline double weighted_ksd(const WeightVector& w, const Matrix& gram) { return weighted_ksd(w.values, gram); }

/// Euclidean projection onto the probability simplex (sort-based, O(s log s)).
inline Vector project_to_simplex(const Vector& v) {
  const Index s = v.size();
  std::vector<double> u(v.data(), v.data() + s);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Index k = 0; k < s; ++k) {
    cumulative += u[static_cast<std::size_t>(k)];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

/// Norm of the unit-step projected gradient of w' K w at w; zero exactly at
/// a minimiser over the simplex.
inline double projected_gradient_norm(const Matrix& gram, const Vector& w) {
  const Vector grad = 2.0 * gram * w;
  return (w - project_to_simplex(w - grad)).norm();
}

/// Largest reciprocal condition number accepted by linear_weights.
inline constexpr double kMinReciprocalCondition = 1e-12;

namespace detail {

// inv(K) 1 / (1' inv(K) 1) through the eigendecomposition of K, or nullopt
// when K is too ill-conditioned for the solve to be meaningful.
inline std::optional<Vector> sum_to_one_minimiser(const Matrix& gram) {
  const Index s = gram.rows();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) return std::nullopt;
  const Vector lambda = eig.eigenvalues();
  if (!(lambda(0) >= kMinReciprocalCondition * lambda(s - 1))) return std::nullopt;
  const Vector z = eig.eigenvectors() * (eig.eigenvectors().transpose() * Vector::Ones(s)).cwiseQuotient(lambda);
  const double total = z.sum();
  if (!z.allFinite() || !(std::abs(total) > 0.0)) return std::nullopt;
  return Vector(z / total);
}

// Active-set refinement of an approximate simplex QP solution. Returns an
// exact KKT point when the active set settles, otherwise `start`.
inline Vector polish_simplex_solution(const Matrix& gram, const Vector& start) {
  const Index s = gram.rows();
  std::vector<bool> in(static_cast<std::size_t>(s), false);
  const double wmax = start.maxCoeff();
  for (Index i = 0; i < s; ++i) in[static_cast<std::size_t>(i)] = start(i) > 1e-9 * wmax;

  const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
  for (Index round = 0; round < 2 * s + 4; ++round) {
    std::vector<Index> support;
    for (Index i = 0; i < s; ++i) {
      if (in[static_cast<std::size_t>(i)]) support.push_back(i);
    }
    if (support.empty()) break;
    const Index k = static_cast<Index>(support.size());
    Matrix sub(k, k);
    for (Index a = 0; a < k; ++a)
      for (Index b = 0; b < k; ++b) sub(a, b) = gram(support[a], support[b]);
    Vector sol;
    if (auto direct = sum_to_one_minimiser(sub)) {
      sol = *direct;
    } else {
      // Singular on the support (repeated points): minimum-norm KKT solution.
      Matrix kkt = Matrix::Zero(k + 1, k + 1);
      kkt.topLeftCorner(k, k) = 2.0 * sub;
      kkt.col(k).head(k).setOnes();
      kkt.row(k).head(k).setOnes();
      Vector rhs = Vector::Zero(k + 1);
      rhs(k) = 1.0;
      sol = kkt.completeOrthogonalDecomposition().solve(rhs).head(k);
    }
    if (!sol.allFinite()) break;

    Index most_negative = -1;
    for (Index a = 0; a < k; ++a) {
      if (sol(a) < 0.0 && (most_negative < 0 || sol(a) < sol(most_negative))) most_negative = a;
    }
    if (most_negative >= 0) {
      in[static_cast<std::size_t>(support[most_negative])] = false;
      continue;
    }
    Vector w = Vector::Zero(s);
    for (Index a = 0; a < k; ++a) w(support[a]) = sol(a);
    // Stationarity makes the gradient constant on the support; outside it
    // the gradient must not be smaller.
    const Vector grad = 2.0 * gram * w;
    double level = 0.0;
    for (Index a = 0; a < k; ++a) level += grad(support[a]);
    level /= static_cast<double>(k);
    Index worst = -1;
    double worst_gap = -1e-12 * scale;
    for (Index i = 0; i < s; ++i) {
      if (in[static_cast<std::size_t>(i)]) continue;
      const double gap = grad(i) - level;
      if (gap < worst_gap) {
        worst_gap = gap;
        worst = i;
      }
    }
    if (worst < 0) return w;
    in[static_cast<std::size_t>(worst)] = true;
  }
  return start;
}

inline void check_gram(const Matrix& gram) {
  if (gram.rows() != gram.cols() || gram.rows() < 1) throw InputError("Gram matrix must be square and nonempty");
  for (Index i = 0; i < gram.rows(); ++i) {
    for (Index j = 0; j < gram.cols(); ++j) {
      if (!std::isfinite(gram(i, j))) {
        throw NumericalError("non-finite Gram entry at (" + std::to_string(i) + ", " +
                             std::to_string(j) + ")");
      }
    }
  }
}

}  // namespace detail

/// Nonnegative, sum-to-one weights minimising w' K w for a given Gram matrix.
///
/// Accelerated projected gradient (FISTA with function-value restarts)
/// until the relative objective decrease drops below `tolerance`, followed
/// by an active-set refinement on the detected support. Hitting
/// `max_iterations` is reported through `converged`, not an exception.
inline WeightVector simplex_weights_from_gram(const Matrix& gram, double tolerance = 1e-10,
                                              int max_iterations = 100000) {
  detail::check_gram(gram);
  const Index s = gram.rows();
  WeightVector out;
  out.constraint = WeightConstraint::simplex;
  if (s == 1) {
    out.values = Vector::Ones(1);
    out.ksd = weighted_ksd(out.values, gram);
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lipschitz = std::max(2.0 * eig.eigenvalues().maxCoeff(), 1e-300);
  auto objective = [&](const Vector& w) { return w.dot(gram * w); };

  Vector w = Vector::Constant(s, 1.0 / static_cast<double>(s));
  Vector y = w;
  double t = 1.0;
  double f = objective(w);
  int iter = 0;
  bool settled = false;
  while (iter < max_iterations) {
    ++iter;
    const Vector next = project_to_simplex(y - (2.0 * gram * y) / lipschitz);
    const double f_next = objective(next);
    if (f_next > f) {
      // Momentum overshoot: restart from the last iterate.
      y = w;
      t = 1.0;
      continue;
    }
    const double decrease = f - f_next;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - w);
    w = next;
    t = t_next;
    f = f_next;
    if (decrease <= tolerance * std::max(std::abs(f), std::numeric_limits<double>::min()) && iter > 1) {
      settled = true;
      break;
    }
  }

  Vector polished = detail::polish_simplex_solution(gram, w);
  if (objective(polished) <= f + 1e-14 * std::max(1.0, std::abs(f))) w = polished;

  // Clamp round-off negatives and renormalise.
  if (w.minCoeff() < 0.0) {
    w = w.cwiseMax(0.0);
    w /= w.sum();
  }

  out.values = w;
  out.ksd = weighted_ksd(w, gram);
  out.solver_iterations = iter;
  out.converged = settled || projected_gradient_norm(gram, w) <= 10.0 * tolerance;
  return out;
}

inline WeightVector simplex_weights(const Chain& points, const SteinKernelConfig& cfg,
                                    double tolerance = 1e-10, int max_iterations = 100000) {
  return simplex_weights_from_gram(stein_gram(points, cfg), tolerance, max_iterations);
}

/// Sum-to-one weights without the sign constraint:
/// v = inv(K) 1 / (1' inv(K) 1), via the eigendecomposition of K.
inline WeightVector linear_weights_from_gram(const Matrix& gram) {
  detail::check_gram(gram);
  const Index s = gram.rows();
  WeightVector out;
  out.constraint = WeightConstraint::sum_to_one;
  if (s == 1) {
    out.values = Vector::Ones(1);
    out.ksd = weighted_ksd(out.values, gram);
    return out;
  }
  const auto v = detail::sum_to_one_minimiser(gram);
  if (!v) throw NumericalError("Gram matrix is ill-conditioned (condition number above 1e12); use simplex weights");
  out.values = *v;
  out.ksd = weighted_ksd(out.values, gram);
  return out;
}

/// Points must be pairwise distinct; a repeated state makes K singular.
inline WeightVector linear_weights(const Chain& points, const SteinKernelConfig& cfg) {
  const auto& x = points.samples();
  for (Index i = 0; i < points.size(); ++i) {
    for (Index j = i + 1; j < points.size(); ++j) {
      if (x.row(i) == x.row(j)) {
        throw InputError("linear weights need distinct points; rows " + std::to_string(i) + " and " +
                         std::to_string(j) + " coincide");
      }
    }
  }
  return linear_weights_from_gram(stein_gram(points, cfg));
}

}  // namespace stein_thin
