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
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "stein_thin/chain.hpp"
#include "stein_thin/error.hpp"
#include "stein_thin/kernel.hpp"
#include "stein_thin/parallel.hpp"
#include "stein_thin/types.hpp"

namespace stein_thin {

/// Unnormalised log-density with its gradient.
struct Target {
  Index dimension = 0;
  std::function<double(const Vector&)> log_density;
  std::function<Vector(const Vector&)> gradient;
  std::string name;
};

namespace targets {

inline Target standard_gaussian(Index d) {
  if (d < 1) throw ConfigError("dimension must be at least 1");
  return {d, [](const Vector& x) { return -0.5 * x.squaredNorm(); }, [](const Vector& x) -> Vector { return -x; },
          "gauss"};
}

inline Target gaussian(const Vector& mean, const Matrix& covariance) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw ConfigError("covariance must be d x d with d = mean length");
  }
  if (!detail::is_spd(covariance)) throw ConfigError("covariance is not symmetric positive definite");
  const Matrix precision = covariance.llt().solve(Matrix::Identity(mean.size(), mean.size()));
  return {mean.size(),
          [mean, precision](const Vector& x) {
            const Vector u = x - mean;
            return -0.5 * u.dot(precision * u);
          },
          [mean, precision](const Vector& x) -> Vector { return -(precision * (x - mean)); }, "aniso"};
}

struct MixtureComponent {
  double weight;
  Vector mean;
  Matrix covariance;
};

/// Finite Gaussian mixture. Weights are normalised internally.
inline Target gaussian_mixture(const std::vector<MixtureComponent>& components) {
  if (components.empty()) throw ConfigError("mixture needs at least one component");
  const Index d = components.front().mean.size();
  struct Prepared {
    double log_weight;
    Vector mean;
    Matrix precision;
    double log_norm;
  };
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw ConfigError("mixture weights must be positive");
    total += c.weight;
  }
  std::vector<Prepared> prep;
  for (const auto& c : components) {
    if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d) {
      throw ConfigError("mixture components must share one dimension");
    }
    if (!detail::is_spd(c.covariance)) throw ConfigError("mixture covariance is not positive definite");
    Eigen::LLT<Matrix> llt(c.covariance);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    prep.push_back({std::log(c.weight / total), c.mean, llt.solve(Matrix::Identity(d, d)),
                    -0.5 * log_det - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi)});
  }
  // log p and the component responsibilities, via log-sum-exp.
  auto evaluate = [prep](const Vector& x, std::vector<double>* resp) {
    std::vector<double> terms(prep.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < prep.size(); ++k) {
      const Vector u = x - prep[k].mean;
      terms[k] = prep[k].log_weight + prep[k].log_norm - 0.5 * u.dot(prep[k].precision * u);
      top = std::max(top, terms[k]);
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - top);
    const double lp = top + std::log(sum);
    if (resp) {
      resp->resize(prep.size());
      for (std::size_t k = 0; k < prep.size(); ++k) (*resp)[k] = std::exp(terms[k] - lp);
    }
    return lp;
  };
  return {d, [evaluate](const Vector& x) { return evaluate(x, nullptr); },
          [evaluate, prep](const Vector& x) -> Vector {
            std::vector<double> resp;
            evaluate(x, &resp);
            Vector g = Vector::Zero(x.size());
            for (std::size_t k = 0; k < prep.size(); ++k) g -= resp[k] * (prep[k].precision * (x - prep[k].mean));
            return g;
          },
          "mixture"};
}

/// 0.5 N((-1.5, 0), 0.5 I) + 0.5 N((1.5, 0), 0.5 I).
inline Target default_mixture() {
  const Matrix cov = 0.5 * Matrix::Identity(2, 2);
  return gaussian_mixture({{0.5, Vector{{-1.5, 0.0}}, cov}, {0.5, Vector{{1.5, 0.0}}, cov}});
}

/// Diagonal Gaussian centred at zero with the given variances; diag(100, 1)
/// by default.
inline Target anisotropic_gaussian(const Vector& variances = Vector{{100.0, 1.0}}) {
  return gaussian(Vector::Zero(variances.size()), variances.asDiagonal().toDenseMatrix());
}

}  // namespace targets

enum class Adaptation { none, acceptance_rate_tuning, covariance_learning };

/// Proposal x* = x + H grad log p(x) + G xi, xi ~ N(0, I).
struct ProposalConfig {
  Matrix H;
  Matrix G;
  Adaptation adapt = Adaptation::none;
  double target_acceptance = 0.234;
  Index warmup = 1000;  // discarded tuning steps (per phase)

  /// H = 0, G = eps I.
  static ProposalConfig random_walk(Index d, double eps, Adaptation adapt = Adaptation::acceptance_rate_tuning) {
    return {Matrix::Zero(d, d), eps * Matrix::Identity(d, d), adapt, 0.234, 1000};
  }

  /// H = eps^2 / 2 I, G = eps I.
  static ProposalConfig mala(Index d, double eps, Adaptation adapt = Adaptation::acceptance_rate_tuning) {
    return {0.5 * eps * eps * Matrix::Identity(d, d), eps * Matrix::Identity(d, d), adapt, 0.574, 1000};
  }

  /// MALA with a constant preconditioner: H = eps^2 / 2 A, G = eps sqrt(A).
  static ProposalConfig preconditioned_mala(const Matrix& a, double eps,
                                            Adaptation adapt = Adaptation::acceptance_rate_tuning) {
    if (!detail::is_spd(a)) throw ConfigError("MALA preconditioner is not positive definite");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    const Matrix root = eig.operatorSqrt();
    return {0.5 * eps * eps * a, eps * root, adapt, 0.574, 1000};
  }
};

/// Default starting step sizes before tuning.
inline double default_rw_step(Index d) { return 2.38 / std::sqrt(static_cast<double>(d)); }
inline double default_mala_step(Index d) { return 1.65 * std::pow(static_cast<double>(d), -1.0 / 6.0); }

struct SamplerStats {
  double acceptance_rate = 0.0;  // over the recorded transitions
  double step_scale = 1.0;       // tuned multiplier s: G -> s G, H -> s^2 H
  bool covariance_fallback = false;
  Matrix proposal_G;  // noise gain actually used for the recorded phase, before s
};

struct McmcRun {
  Chain chain;
  SamplerStats stats;
};

namespace detail {

class MhKernel {
 public:
  MhKernel(const Target& target, Matrix h, Matrix g) : target_(&target), h_(std::move(h)), g_(std::move(g)) {
    set_gain(g_);
  }

  void set_gain(const Matrix& g) {
    g_ = g;
    lu_.compute(g_);
    if (!lu_.isInvertible()) throw ConfigError("proposal noise gain G is singular");
    drift_ = !h_.isZero(0.0);
  }

  const Matrix& gain() const { return g_; }

  struct State {
    Vector x;
    double log_p;
    Vector grad;
  };

  State evaluate(const Vector& x) const { return {x, target_->log_density(x), target_->gradient(x)}; }

  // One MH transition with step multiplier s. Returns the acceptance
  // probability; `state` is updated in place.
  double step(State& state, double s, std::mt19937_64& rng, std::normal_distribution<double>& normal,
              std::uniform_real_distribution<double>& uniform, Index iteration) const {
    const Index d = state.x.size();
    Vector xi(d);
    for (Index i = 0; i < d; ++i) xi(i) = normal(rng);
    const Vector mean = drift_ ? Vector(state.x + s * s * (h_ * state.grad)) : state.x;
    const Vector proposal = mean + s * (g_ * xi);
    const double lp = target_->log_density(proposal);
    if (std::isnan(lp)) {
      throw NumericalError("NaN log-density at iteration " + std::to_string(iteration));
    }
    if (lp == -std::numeric_limits<double>::infinity()) {
      (void)uniform(rng);
      return 0.0;
    }
    const Vector grad = target_->gradient(proposal);
    if (!grad.allFinite() || !std::isfinite(lp)) {
      throw NumericalError("non-finite log-density or gradient at iteration " + std::to_string(iteration));
    }
    double log_ratio = lp - state.log_p;
    if (drift_) {
      // log q(x | x*) - log q(x* | x) with q(b | a) = N(b; a + s^2 H grad(a), s^2 G G')
      const Vector back = state.x - (proposal + s * s * (h_ * grad));
      const Vector fwd = proposal - mean;
      const Vector zb = lu_.solve(back) / s;
      const Vector zf = lu_.solve(fwd) / s;
      log_ratio += -0.5 * zb.squaredNorm() + 0.5 * zf.squaredNorm();
    }
    const double accept = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    if (uniform(rng) < accept) state = {proposal, lp, grad};
    return accept;
  }

 private:
  const Target* target_;
  Matrix h_;
  Matrix g_;
  Eigen::FullPivLU<Matrix> lu_;
  bool drift_ = false;
};

// Robbins-Monro adaptation of log s towards the target acceptance rate.
inline double tune_scale(const MhKernel& kernel, MhKernel::State& state, double scale, Index steps, double target,
                         std::mt19937_64& rng, std::normal_distribution<double>& normal,
                         std::uniform_real_distribution<double>& uniform) {
  double log_s = std::log(scale);
  for (Index k = 0; k < steps; ++k) {
    const double a = kernel.step(state, std::exp(log_s), rng, normal, uniform, -(k + 1));
    log_s += (a - target) / std::pow(static_cast<double>(k + 1), 0.6);
    log_s = std::clamp(log_s, -30.0, 30.0);
  }
  return std::exp(log_s);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Metropolis-Hastings with proposal mean x + H grad log p(x) and covariance
/// G G'. The Hastings correction is applied whenever H != 0. Tuning phases
/// (see Adaptation) run first and are discarded; the returned chain starts
/// at the post-tuning state (x0 when adapt = none) and holds n states,
/// rejected proposals included as repeats.
inline McmcRun mh_run(const Target& target, const ProposalConfig& cfg, const Vector& x0, Index n, std::uint64_t seed,
                      std::uint64_t stream = 0) {
  const Index d = target.dimension;
  if (n < 1) throw InputError("number of iterations must be at least 1");
  if (x0.size() != d) throw InputError("starting point has the wrong dimension");
  if (cfg.H.rows() != d || cfg.H.cols() != d || cfg.G.rows() != d || cfg.G.cols() != d) {
    throw ConfigError("proposal matrices must be d x d");
  }
  detail::MhKernel kernel(target, cfg.H, cfg.G);
  auto state = kernel.evaluate(x0);
  if (!std::isfinite(state.log_p)) throw InputError("log-density is not finite at the starting point");
  if (!state.grad.allFinite()) throw InputError("gradient is not finite at the starting point");

  auto rng = detail::make_rng(seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  SamplerStats stats;
  double scale = 1.0;
  if (cfg.adapt == Adaptation::covariance_learning) {
    const Index phase1 = std::max<Index>(cfg.warmup, d + 1);
    // Preliminary random walk, tuned on the fly, to estimate the covariance.
    RowMatrix prelim(phase1, d);
    double log_s = 0.0;
    for (Index k = 0; k < phase1; ++k) {
      const double a = kernel.step(state, std::exp(log_s), rng, normal, uniform, -(k + 1));
      log_s = std::clamp(log_s + (a - cfg.target_acceptance) / std::pow(static_cast<double>(k + 1), 0.6), -30.0, 30.0);
      prelim.row(k) = state.x.transpose();
    }
    const Matrix cov = sample_covariance(prelim);
    if (detail::is_spd(cov)) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
      kernel.set_gain(eig.operatorSqrt());
    } else {
      stats.covariance_fallback = true;
    }
  }
  if (cfg.adapt != Adaptation::none) {
    scale = detail::tune_scale(kernel, state, 1.0, cfg.warmup, cfg.target_acceptance, rng, normal, uniform);
  }
  stats.step_scale = scale;
  stats.proposal_G = kernel.gain();

  RowMatrix samples(n, d);
  RowMatrix gradients(n, d);
  Vector log_p(n);
  samples.row(0) = state.x.transpose();
  gradients.row(0) = state.grad.transpose();
  log_p(0) = state.log_p;
  double accepted = 0.0;
  for (Index i = 1; i < n; ++i) {
    const Vector before = state.x;
    kernel.step(state, scale, rng, normal, uniform, i);
    if (state.x != before) accepted += 1.0;
    samples.row(i) = state.x.transpose();
    gradients.row(i) = state.grad.transpose();
    log_p(i) = state.log_p;
  }
  stats.acceptance_rate = n > 1 ? accepted / static_cast<double>(n - 1) : 0.0;
  return {Chain(std::move(samples), std::move(gradients), std::move(log_p)), std::move(stats)};
}

/// Adaptive random walk: a tuned preliminary random walk of n_preliminary
/// steps estimates the covariance S, then the recorded phase uses
/// G = s sqrt(S) (symmetric square root) with s tuned during a discarded
/// warm-up. A singular S keeps the isotropic proposal and sets
/// stats.covariance_fallback.
inline McmcRun ada_rw_run(const Target& target, const Vector& x0, Index n, Index n_preliminary, std::uint64_t seed,
                          std::uint64_t stream = 0) {
  const Index d = target.dimension;
  if (n_preliminary < d + 1) throw InputError("ADA-RW needs n_preliminary >= d + 1");
  ProposalConfig cfg = ProposalConfig::random_walk(d, default_rw_step(d), Adaptation::covariance_learning);
  cfg.warmup = n_preliminary;
  return mh_run(target, cfg, x0, n, seed, stream);
}

/// Independent chains from several starting points; chain l uses stream l.
/// Output does not depend on the number of worker threads.
inline std::vector<McmcRun> run_chains(const Target& target, const ProposalConfig& cfg, const std::vector<Vector>& starts,
                                       Index n, std::uint64_t seed) {
  std::vector<std::optional<McmcRun>> slots(starts.size());
  std::vector<std::exception_ptr> errors(starts.size());
  parallel_for(starts.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t l = lo; l < hi; ++l) {
      try {
        slots[l] = mh_run(target, cfg, starts[l], n, seed, l);
      } catch (...) {
        errors[l] = std::current_exception();
      }
    }
  });
  std::vector<McmcRun> out;
  for (std::size_t l = 0; l < starts.size(); ++l) {
    if (errors[l]) std::rethrow_exception(errors[l]);
    out.push_back(std::move(*slots[l]));
  }
  return out;
}

}  // namespace stein_thin
