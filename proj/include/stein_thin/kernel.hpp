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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "stein_thin/error.hpp"
#include "stein_thin/types.hpp"

namespace stein_thin {

namespace detail {

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Symmetric to 1e-12 (relative), Cholesky succeeds and the spectrum is
// bounded away from zero relative to its largest eigenvalue.
inline bool is_spd(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) return false;
  if (!a.allFinite()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  return lo > 0.0 && lo > hi * static_cast<double>(a.rows()) * 1e-15;
}

}  // namespace detail

/// Inverse multiquadric base kernel k(x,y) = (c^2 + (x-y)' inv(gamma) (x-y))^beta
/// with a preconditioner matrix gamma.
///
/// gamma is factorised once (Cholesky); inv(gamma) is applied through
/// triangular solves. The explicit inverse is kept only for its trace.
/// Instances are immutable once built.
class SteinKernelConfig {
 public:
  static SteinKernelConfig make(const Matrix& gamma, double c = 1.0, double beta = -0.5) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("kernel offset c must be positive");
    if (!(beta > -1.0 && beta < 0.0)) {
      throw ConfigError("kernel exponent beta must lie in the open interval (-1, 0)");
    }
    if (!detail::is_spd(gamma)) throw ConfigError("preconditioner is not symmetric positive definite");
    SteinKernelConfig cfg;
    cfg.c_ = c;
    cfg.beta_ = beta;
    cfg.gamma_ = 0.5 * (gamma + gamma.transpose());
    cfg.llt_.compute(cfg.gamma_);
    cfg.gamma_inverse_ = cfg.llt_.solve(Matrix::Identity(gamma.rows(), gamma.cols()));
    cfg.trace_inverse_ = cfg.gamma_inverse_.trace();
    return cfg;
  }

  static SteinKernelConfig identity(Index d, double c = 1.0, double beta = -0.5) {
    return make(Matrix::Identity(d, d), c, beta);
  }

  double c() const { return c_; }
  double beta() const { return beta_; }
  Index dimension() const { return gamma_.rows(); }
  const Matrix& gamma() const { return gamma_; }
  const Matrix& gamma_inverse() const { return gamma_inverse_; }
  double trace_inverse() const { return trace_inverse_; }

  /// Writes inv(gamma) * x into out. Every caller goes through this routine
  /// so that identical states always produce bit-identical kernel values.
  void apply_inverse(std::span<const double> x, std::span<double> out) const {
    const Index d = dimension();
    const Matrix& l = llt_.matrixLLT();  // lower triangle holds L
    // forward: L z = x
    for (Index i = 0; i < d; ++i) {
      double s = x[i];
      for (Index k = 0; k < i; ++k) s -= l(i, k) * out[k];
      out[i] = s / l(i, i);
    }
    // backward: L' y = z
    for (Index i = d - 1; i >= 0; --i) {
      double s = out[i];
      for (Index k = i + 1; k < d; ++k) s -= l(k, i) * out[k];
      out[i] = s / l(i, i);
    }
  }

  Vector apply_inverse(const Vector& x) const {
    check_dimension(x.size());
    Vector out(x.size());
    apply_inverse(detail::as_span(x), {out.data(), static_cast<std::size_t>(out.size())});
    return out;
  }

  void check_dimension(Index n) const {
    if (n != dimension()) {
      throw InputError("dimension mismatch: expected " + std::to_string(dimension()) + ", got " +
                       std::to_string(n));
    }
  }

 private:
  SteinKernelConfig() = default;

  double c_ = 1.0;
  double beta_ = -0.5;
  Matrix gamma_;
  Matrix gamma_inverse_;
  double trace_inverse_ = 0.0;
  Eigen::LLT<Matrix> llt_;
};

/// Base kernel value with both gradients and the cross divergence
/// div_x div_y k(x, y).
struct KernelParts {
  double k = 0.0;
  Vector grad_x;
  Vector grad_y;
  double cross_divergence = 0.0;
};

inline KernelParts imq_parts(const Vector& x, const Vector& y, const SteinKernelConfig& cfg) {
  cfg.check_dimension(x.size());
  cfg.check_dimension(y.size());
  const Vector q = cfg.apply_inverse(x) - cfg.apply_inverse(y);  // inv(gamma) (x - y)
  const double beta = cfg.beta();
  const double base = cfg.c() * cfg.c() + (x - y).dot(q);
  KernelParts out;
  out.k = std::pow(base, beta);
  const double d1 = beta * std::pow(base, beta - 1.0);
  out.grad_x = 2.0 * d1 * q;
  out.grad_y = -out.grad_x;
  out.cross_divergence = -4.0 * beta * (beta - 1.0) * std::pow(base, beta - 2.0) * q.squaredNorm() -
                         2.0 * d1 * cfg.trace_inverse();
  return out;
}

namespace detail {

// Langevin Stein kernel on raw rows. px = inv(gamma) x and py = inv(gamma) y
// are precomputed by the caller through SteinKernelConfig::apply_inverse.
inline double stein_kernel_rows(const double* x, const double* px, const double* gx, const double* y,
                                const double* py, const double* gy, Index d, double c2, double beta,
                                double trace_inverse) {
  double uq = 0.0, qq = 0.0, qg = 0.0, gg = 0.0;
  for (Index i = 0; i < d; ++i) {
    const double q = px[i] - py[i];
    uq += (x[i] - y[i]) * q;
    qq += q * q;
    qg += q * (gy[i] - gx[i]);
    gg += gx[i] * gy[i];
  }
  const double base = c2 + uq;
  const double k = std::pow(base, beta);
  const double d1 = beta * k / base;                      // f'(base)
  const double d2 = (beta - 1.0) * d1 / base;             // f''(base)
  const double cross = -4.0 * d2 * qq - 2.0 * d1 * trace_inverse;
  // <grad_x k, gy> + <grad_y k, gx> = 2 f' <q, gy - gx>
  return cross + 2.0 * d1 * qg + k * gg;
}

}  // namespace detail

/// Langevin Stein kernel k_P(x, y) built from the IMQ base kernel. gx and gy
/// are the target's log-density gradients at x and y.
inline double stein_kernel(const Vector& x, const Vector& gx, const Vector& y, const Vector& gy,
                           const SteinKernelConfig& cfg) {
  cfg.check_dimension(x.size());
  cfg.check_dimension(y.size());
  cfg.check_dimension(gx.size());
  cfg.check_dimension(gy.size());
  if (!x.allFinite() || !y.allFinite()) throw InputError("non-finite state passed to stein_kernel");
  if (!gx.allFinite() || !gy.allFinite()) {
    throw InputError("non-finite gradient passed to stein_kernel");
  }
  const Vector px = cfg.apply_inverse(x);
  const Vector py = cfg.apply_inverse(y);
  return detail::stein_kernel_rows(x.data(), px.data(), gx.data(), y.data(), py.data(), gy.data(),
                                   x.size(), cfg.c() * cfg.c(), cfg.beta(), cfg.trace_inverse());
}

/// Median of the pairwise Euclidean distances between rows. For an even
/// number of pairs the lower middle order statistic is returned. A zero
/// median is replaced by 1.
inline double median_heuristic(const RowMatrix& samples) {
  const Index n = samples.rows();
  if (n < 2) throw InputError("median heuristic needs at least 2 states");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) dist.push_back((samples.row(i) - samples.row(j)).norm());
  }
  const std::size_t mid = (dist.size() - 1) / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  const double med = dist[mid];
  return med > 0.0 ? med : 1.0;
}

enum class Preconditioner { med, sclmed, smpcov, identity, explicit_matrix };

inline std::string to_string(Preconditioner p) {
  switch (p) {
    case Preconditioner::med: return "med";
    case Preconditioner::sclmed: return "sclmed";
    case Preconditioner::smpcov: return "smpcov";
    case Preconditioner::identity: return "id";
    case Preconditioner::explicit_matrix: return "explicit";
  }
  return "?";
}

inline Preconditioner parse_preconditioner(const std::string& s) {
  if (s == "med") return Preconditioner::med;
  if (s == "sclmed") return Preconditioner::sclmed;
  if (s == "smpcov") return Preconditioner::smpcov;
  if (s == "id" || s == "identity") return Preconditioner::identity;
  if (s == "explicit") return Preconditioner::explicit_matrix;
  throw InputError("unknown preconditioner '" + s + "'");
}

/// Number of leading states used by the median heuristics.
inline constexpr Index kMedianSubsample = 1000;

/// Sample covariance with the n - 1 denominator.
inline Matrix sample_covariance(const RowMatrix& samples) {
  const Index n = samples.rows();
  if (n < 2) throw InputError("sample covariance needs at least 2 states");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const RowMatrix centred = samples.rowwise() - mean;
  return (centred.transpose() * centred) / static_cast<double>(n - 1);
}

/// Data-driven preconditioner. med and sclmed look at the first
/// min(n, 1000) states; smpcov uses all of them.
inline SteinKernelConfig build_preconditioner(Preconditioner setting, const RowMatrix& samples,
                                              Index m,
                                              const std::optional<Matrix>& explicit_gamma = {}) {
  const Index n = samples.rows();
  const Index d = samples.cols();
  if (d < 1) throw InputError("samples have zero dimension");
  switch (setting) {
    case Preconditioner::identity:
      return SteinKernelConfig::identity(d);
    case Preconditioner::explicit_matrix: {
      if (!explicit_gamma) throw ConfigError("explicit preconditioner requested without a matrix");
      if (explicit_gamma->rows() != d || explicit_gamma->cols() != d) {
        throw ConfigError("explicit preconditioner must be " + std::to_string(d) + "x" +
                          std::to_string(d));
      }
      if (!detail::is_spd(*explicit_gamma)) {
        throw ConfigError("explicit preconditioner is not symmetric positive definite");
      }
      return SteinKernelConfig::make(*explicit_gamma);
    }
    case Preconditioner::med:
    case Preconditioner::sclmed: {
      if (n < 2) throw InputError("median preconditioner needs at least 2 states");
      const Index n0 = std::min(n, kMedianSubsample);
      double ell = median_heuristic(samples.topRows(n0));
      if (setting == Preconditioner::sclmed) {
        if (m < 1) throw InputError("sclmed needs m >= 1");
        const double log_m = std::log(static_cast<double>(m));
        if (log_m > 0.0) ell /= std::sqrt(log_m);
      }
      return SteinKernelConfig::make(ell * ell * Matrix::Identity(d, d));
    }
    case Preconditioner::smpcov: {
      if (n < 2) throw InputError("smpcov needs at least 2 states");
      const Matrix cov = sample_covariance(samples);
      if (!detail::is_spd(cov)) throw ConfigError("smpcov: sample covariance is singular");
      return SteinKernelConfig::make(cov);
    }
  }
  throw ConfigError("unknown preconditioner setting");
}

}  // namespace stein_thin
