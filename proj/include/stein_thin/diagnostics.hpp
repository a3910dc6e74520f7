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
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "stein_thin/error.hpp"
#include "stein_thin/special.hpp"
#include "stein_thin/types.hpp"

namespace stein_thin {

// Convergence diagnostics: Gelman-Rubin (GR) and Vats-Knudson (VK) R-hat,
// univariate and multivariate, with the ESS-based threshold and the
// burn-in rule built on them.

enum class RhatMethod { gr, vk };
enum class RhatVariant { univariate_max, multivariate };

/// Smallest chain length accepted by the lugsail estimator.
inline constexpr Index kMinLugsailLength = 27;

namespace detail {

inline void check_equal_lengths(std::size_t chains, Index n, Index other) {
  if (chains == 0) throw InputError("no chains supplied");
  if (other != n) throw InputError("all chains must have the same length");
}

inline double sample_variance(const Vector& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace detail

/// Non-overlapping batch means estimate of n Var(mean) with batch size b.
/// The trailing partial batch is discarded.
inline double batch_means(const Vector& values, Index batch) {
  const Index a = values.size() / batch;
  if (batch < 1 || a < 2) throw InputError("batch means needs at least two full batches");
  Vector means(a);
  for (Index k = 0; k < a; ++k) means(k) = values.segment(k * batch, batch).mean();
  const double grand = means.mean();
  return static_cast<double>(batch) * (means.array() - grand).square().sum() / static_cast<double>(a - 1);
}

/// Lugsail batch means: 2 BM(b) - BM(floor(b / 3)) with b = floor(n^(1/3)).
/// Needs n >= 27. The estimate can be negative for strongly antithetic
/// input.
inline double lugsail_batch_means(const Vector& values) {
  const Index n = values.size();
  if (n < kMinLugsailLength) {
    throw InputError("lugsail batch means needs at least " + std::to_string(kMinLugsailLength) +
                     " values, got " + std::to_string(n));
  }
  Index b = static_cast<Index>(std::floor(std::cbrt(static_cast<double>(n))));
  while ((b + 1) * (b + 1) * (b + 1) <= n) ++b;  // guard cbrt round-off
  while (b * b * b > n) --b;
  return 2.0 * batch_means(values, b) - batch_means(values, b / 3);
}

/// Matrix analogue of batch_means for rows of `values`.
inline Matrix batch_means(const RowMatrix& values, Index batch) {
  const Index a = values.rows() / batch;
  if (batch < 1 || a < 2) throw InputError("batch means needs at least two full batches");
  RowMatrix means(a, values.cols());
  for (Index k = 0; k < a; ++k) means.row(k) = values.middleRows(k * batch, batch).colwise().mean();
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const RowMatrix centred = means.rowwise() - grand;
  return static_cast<double>(batch) * (centred.transpose() * centred) / static_cast<double>(a - 1);
}

inline Matrix lugsail_batch_means(const RowMatrix& values) {
  const Index n = values.rows();
  if (n < kMinLugsailLength) {
    throw InputError("lugsail batch means needs at least " + std::to_string(kMinLugsailLength) +
                     " values, got " + std::to_string(n));
  }
  Index b = static_cast<Index>(std::floor(std::cbrt(static_cast<double>(n))));
  while ((b + 1) * (b + 1) * (b + 1) <= n) ++b;
  while (b * b * b > n) --b;
  return 2.0 * batch_means(values, b) - batch_means(values, b / 3);
}

/// GR diagnostic: sqrt(sigma2 / s2) with s2 the mean within-chain variance,
/// sigma2 = (n-1)/n s2 + B/n and B/n the variance of the chain means.
inline double gr_rhat(std::span<const Vector> chains) {
  const std::size_t L = chains.size();
  if (L < 2) throw InputError("GR diagnostic needs at least 2 chains");
  const Index n = chains[0].size();
  if (n < 2) throw InputError("GR diagnostic needs chains of length >= 2");
  Vector means(static_cast<Index>(L));
  double s2 = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    detail::check_equal_lengths(L, n, chains[l].size());
    means(static_cast<Index>(l)) = chains[l].mean();
    s2 += detail::sample_variance(chains[l]);
  }
  s2 /= static_cast<double>(L);
  if (!(s2 > 0.0)) throw DegenerateError("zero within-chain variance");
  const double b_over_n = detail::sample_variance(means);
  const double nd = static_cast<double>(n);
  const double sigma2 = (nd - 1.0) / nd * s2 + b_over_n;
  return std::sqrt(sigma2 / s2);
}

struct VkResult {
  double rhat = 0.0;
  double ess = 0.0;  // +inf when the asymptotic variance estimate is <= 0
};

/// VK diagnostic with the lugsail estimate in place of B/n, and the
/// matching effective sample size, so that
/// rhat^2 = (n-1)/n + L / ess.
inline VkResult vk_diagnostic(std::span<const Vector> chains) {
  const std::size_t L = chains.size();
  if (L < 1) throw InputError("VK diagnostic needs at least 1 chain");
  const Index n = chains[0].size();
  double s2 = 0.0;
  double tau2 = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    detail::check_equal_lengths(L, n, chains[l].size());
    if (n < kMinLugsailLength) {
      throw InputError("VK diagnostic needs chains of length >= " + std::to_string(kMinLugsailLength));
    }
    s2 += detail::sample_variance(chains[l]);
    tau2 += lugsail_batch_means(chains[l]);
  }
  s2 /= static_cast<double>(L);
  tau2 /= static_cast<double>(L);
  if (!(s2 > 0.0)) throw DegenerateError("zero within-chain variance");
  tau2 = std::max(0.0, tau2);
  const double nd = static_cast<double>(n);
  const double excess = tau2 / (nd * s2);  // = L / ESS
  VkResult out;
  out.rhat = std::sqrt((nd - 1.0) / nd + excess);
  out.ess = tau2 > 0.0 ? static_cast<double>(L) * nd * s2 / tau2 : std::numeric_limits<double>::infinity();
  return out;
}

inline double vk_rhat(std::span<const Vector> chains) { return vk_diagnostic(chains).rhat; }

namespace detail {

inline Vector column(const RowMatrix& m, Index c) { return m.col(c); }

inline std::vector<Vector> columns(std::span<const RowMatrix> chains, Index c) {
  std::vector<Vector> out;
  out.reserve(chains.size());
  for (const auto& ch : chains) out.push_back(column(ch, c));
  return out;
}

// (det T / det S)^(1/d), floored at 0, with S factorised by Cholesky.
inline double det_ratio_root(const Matrix& t, const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw DegenerateError("within-chain covariance is singular");
  const Index d = s.rows();
  const Matrix half = llt.matrixL().solve(t);
  const Matrix whitened = llt.matrixL().solve(half.transpose()).transpose();
  const double det = whitened.determinant();
  if (!(det > 0.0)) return 0.0;
  return std::pow(det, 1.0 / static_cast<double>(d));
}

inline Matrix row_covariance(const RowMatrix& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const RowMatrix centred = x.rowwise() - mean;
  return (centred.transpose() * centred) / static_cast<double>(x.rows() - 1);
}

}  // namespace detail

/// Multivariate VK diagnostic and ESS:
///   rhat = sqrt((n-1)/n + (det T / det S)^(1/d) / n),
///   ess  = L n (det S / det T)^(1/d),
/// S the mean within-chain covariance, T the mean lugsail covariance.
/// For d = 1 this is the univariate diagnostic.
inline VkResult multivariate_vk_diagnostic(std::span<const RowMatrix> chains) {
  const std::size_t L = chains.size();
  if (L < 1) throw InputError("VK diagnostic needs at least 1 chain");
  const Index n = chains[0].rows();
  const Index d = chains[0].cols();
  if (d == 1) {
    const auto cols = detail::columns(chains, 0);
    return vk_diagnostic(cols);
  }
  Matrix s = Matrix::Zero(d, d);
  Matrix t = Matrix::Zero(d, d);
  for (const auto& ch : chains) {
    detail::check_equal_lengths(L, n, ch.rows());
    if (ch.cols() != d) throw InputError("all chains must have the same dimension");
    if (n < kMinLugsailLength) {
      throw InputError("VK diagnostic needs chains of length >= " + std::to_string(kMinLugsailLength));
    }
    s += detail::row_covariance(ch);
    t += lugsail_batch_means(ch);
  }
  s /= static_cast<double>(L);
  t /= static_cast<double>(L);
  const double root = detail::det_ratio_root(t, s);
  const double nd = static_cast<double>(n);
  VkResult out;
  out.rhat = std::sqrt((nd - 1.0) / nd + root / nd);
  out.ess = root > 0.0 ? static_cast<double>(L) * nd / root : std::numeric_limits<double>::infinity();
  return out;
}

/// Determinant-based multivariate R-hat. For GR, T is n times the
/// covariance of the chain means (needs L >= 2); for VK, T is the mean
/// lugsail covariance.
inline double multivariate_rhat(std::span<const RowMatrix> chains, RhatMethod method) {
  if (chains.empty()) throw InputError("no chains supplied");
  const Index d = chains[0].cols();
  if (method == RhatMethod::vk) return multivariate_vk_diagnostic(chains).rhat;
  if (d == 1) {
    const auto cols = detail::columns(chains, 0);
    return gr_rhat(cols);
  }
  const std::size_t L = chains.size();
  if (L < 2) throw InputError("GR diagnostic needs at least 2 chains");
  const Index n = chains[0].rows();
  if (n < 2) throw InputError("GR diagnostic needs chains of length >= 2");
  Matrix s = Matrix::Zero(d, d);
  RowMatrix means(static_cast<Index>(L), d);
  for (std::size_t l = 0; l < L; ++l) {
    detail::check_equal_lengths(L, n, chains[l].rows());
    if (chains[l].cols() != d) throw InputError("all chains must have the same dimension");
    s += detail::row_covariance(chains[l]);
    means.row(static_cast<Index>(l)) = chains[l].colwise().mean();
  }
  s /= static_cast<double>(L);
  const double nd = static_cast<double>(n);
  const Matrix t = nd * detail::row_covariance(means);
  const double root = detail::det_ratio_root(t, s);
  return std::sqrt((nd - 1.0) / nd + root / nd);
}

/// ESS needed for a (1 - alpha) confidence region of relative volume
/// epsilon in dimension d:
///   M = 2^(2/d) pi / (d Gamma(d/2))^(2/d) * chi2_{1-alpha, d} / epsilon^2.
/// For d = 1 the constant is 4 pi / Gamma(1/2)^2 = 4.
inline double minimum_ess(double alpha, double epsilon, Index d) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (d < 1) throw InputError("dimension must be at least 1");
  const double p = static_cast<double>(d);
  const double log_const = (2.0 / p) * std::log(2.0) + std::log(std::numbers::pi) -
                           (2.0 / p) * (std::log(p) + std::lgamma(0.5 * p));
  const double chi2 = special::chi_squared_quantile(1.0 - alpha, p);
  return std::exp(log_const) * chi2 / (epsilon * epsilon);
}

/// Threshold on R-hat - 1 that corresponds to the minimum ESS:
/// delta = sqrt(1 + L / M) - 1.
inline double threshold_delta(Index chains, double alpha, double epsilon, Index d) {
  if (chains < 1) throw InputError("need at least one chain");
  const double m = minimum_ess(alpha, epsilon, d);
  const double r = static_cast<double>(chains) / m;
  return r / (std::sqrt(1.0 + r) + 1.0);  // sqrt(1 + r) - 1 without cancellation
}

enum class BurnInStatus { reached, not_reached, not_evaluable };

inline std::string to_string(BurnInStatus s) {
  switch (s) {
    case BurnInStatus::reached: return "reached";
    case BurnInStatus::not_reached: return "not reached";
    case BurnInStatus::not_evaluable: return "not evaluable";
  }
  return "?";
}

struct DiagnosticReport {
  std::vector<std::pair<Index, double>> rhat_series;  // (prefix length, R-hat)
  RhatMethod method = RhatMethod::vk;
  RhatVariant variant = RhatVariant::multivariate;
  Index chains = 0;
  double delta = 0.0;
  BurnInStatus status = BurnInStatus::not_evaluable;
  std::optional<Index> burn_in;
  // univariate_max only: first crossing per coordinate (nullopt = none)
  std::vector<std::optional<Index>> coordinate_burn_in;
};

namespace detail {

inline std::optional<double> rhat_on_prefix(std::span<const RowMatrix> chains, Index end, Index coordinate,
                                            RhatMethod method) {
  const Index min_len = method == RhatMethod::vk ? kMinLugsailLength : 2;
  if (end < min_len) return std::nullopt;
  try {
    if (coordinate < 0) {
      std::vector<RowMatrix> prefix;
      prefix.reserve(chains.size());
      for (const auto& ch : chains) prefix.push_back(ch.topRows(end));
      return multivariate_rhat(prefix, method);
    }
    std::vector<Vector> prefix;
    prefix.reserve(chains.size());
    for (const auto& ch : chains) prefix.push_back(ch.col(coordinate).head(end));
    return method == RhatMethod::gr ? gr_rhat(prefix) : vk_rhat(prefix);
  } catch (const DegenerateError&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Evaluates R-hat on the growing prefixes [0, k stride), k = 1, 2, ..., and
/// reports the first prefix length at which R-hat < 1 + delta(L, alpha,
/// epsilon, d'), with d' = 1 for the univariate variant and d' = d for the
/// multivariate one. In the univariate variant each coordinate gets its own
/// first crossing and the burn-in is the largest of them. Prefixes where
/// the statistic is undefined (too short, zero variance) are skipped.
inline DiagnosticReport estimate_burn_in(std::span<const RowMatrix> chains, RhatMethod method, RhatVariant variant,
                                         double alpha, double epsilon, Index stride) {
  if (stride < 1) throw InputError("stride must be at least 1");
  if (chains.empty()) throw InputError("no chains supplied");
  if (method == RhatMethod::gr && chains.size() < 2) throw InputError("GR diagnostic needs at least 2 chains");
  const Index n = chains[0].rows();
  const Index d = chains[0].cols();
  for (const auto& ch : chains) {
    if (ch.rows() != n || ch.cols() != d) throw InputError("all chains must have the same shape");
  }

  DiagnosticReport rep;
  rep.method = method;
  rep.variant = variant;
  rep.chains = static_cast<Index>(chains.size());
  rep.delta = threshold_delta(rep.chains, alpha, epsilon, variant == RhatVariant::multivariate ? d : 1);
  const double limit = 1.0 + rep.delta;

  if (variant == RhatVariant::multivariate) {
    for (Index end = stride; end <= n; end += stride) {
      const auto r = detail::rhat_on_prefix(chains, end, -1, method);
      if (!r) continue;
      rep.rhat_series.emplace_back(end, *r);
      if (!rep.burn_in && *r < limit) rep.burn_in = end;
    }
    if (rep.rhat_series.empty()) rep.status = BurnInStatus::not_evaluable;
    else rep.status = rep.burn_in ? BurnInStatus::reached : BurnInStatus::not_reached;
    return rep;
  }

  rep.coordinate_burn_in.assign(static_cast<std::size_t>(d), std::nullopt);
  std::vector<bool> evaluated(static_cast<std::size_t>(d), false);
  for (Index end = stride; end <= n; end += stride) {
    std::optional<double> worst;
    for (Index c = 0; c < d; ++c) {
      const auto r = detail::rhat_on_prefix(chains, end, c, method);
      if (!r) continue;
      evaluated[static_cast<std::size_t>(c)] = true;
      worst = worst ? std::max(*worst, *r) : *r;
      auto& first = rep.coordinate_burn_in[static_cast<std::size_t>(c)];
      if (!first && *r < limit) first = end;
    }
    if (worst) rep.rhat_series.emplace_back(end, *worst);
  }
  const bool all_evaluated = std::all_of(evaluated.begin(), evaluated.end(), [](bool b) { return b; });
  if (!all_evaluated) {
    rep.status = BurnInStatus::not_evaluable;
    return rep;
  }
  Index worst_burn_in = 0;
  for (const auto& b : rep.coordinate_burn_in) {
    if (!b) {
      rep.status = BurnInStatus::not_reached;
      return rep;
    }
    worst_burn_in = std::max(worst_burn_in, *b);
  }
  rep.status = BurnInStatus::reached;
  rep.burn_in = worst_burn_in;
  return rep;
}

}  // namespace stein_thin
