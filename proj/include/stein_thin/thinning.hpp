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

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stein_thin/chain.hpp"
#include "stein_thin/error.hpp"
#include "stein_thin/kernel.hpp"
#include "stein_thin/parallel.hpp"

namespace stein_thin {

/// A chain paired with a kernel, with inv(gamma) x_i cached for every row so
/// that each Stein kernel evaluation is O(d).
class PreparedPoints {
 public:
  PreparedPoints(const Chain& chain, const SteinKernelConfig& cfg)
      : chain_(&chain), cfg_(&cfg), applied_(chain.size(), chain.dimension()) {
    cfg.check_dimension(chain.dimension());
    const auto d = static_cast<std::size_t>(chain.dimension());
    parallel_for(static_cast<std::size_t>(chain.size()), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const auto r = static_cast<Index>(i);
        cfg.apply_inverse({chain.samples().row(r).data(), d}, {applied_.row(r).data(), d});
      }
    });
  }

  Index size() const { return chain_->size(); }

  double operator()(Index i, Index j) const {
    const auto& x = chain_->samples();
    const auto& g = chain_->gradients();
    return detail::stein_kernel_rows(x.row(i).data(), applied_.row(i).data(), g.row(i).data(),
                                     x.row(j).data(), applied_.row(j).data(), g.row(j).data(),
                                     chain_->dimension(), cfg_->c() * cfg_->c(), cfg_->beta(),
                                     cfg_->trace_inverse());
  }

 private:
  const Chain* chain_;
  const SteinKernelConfig* cfg_;
  RowMatrix applied_;
};

/// Dense Gram matrix of the Stein kernel over all rows of `points`.
inline Matrix stein_gram(const Chain& points, const SteinKernelConfig& cfg) {
  PreparedPoints prep(points, cfg);
  const Index s = points.size();
  Matrix k(s, s);
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double v = prep(i, j);
      if (!std::isfinite(v)) {
        throw NumericalError("non-finite Stein kernel value at pair (" + std::to_string(i) + ", " +
                             std::to_string(j) + ")");
      }
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

/// Kernel Stein discrepancy of the uniform empirical measure on the rows of
/// `points`. Repeated rows count with their multiplicity.
inline double ksd(const Chain& points, const SteinKernelConfig& cfg) {
  PreparedPoints prep(points, cfg);
  const Index s = points.size();
  double total = 0.0;
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < s; ++j) total += prep(i, j);
  }
  if (!std::isfinite(total)) throw NumericalError("non-finite Stein kernel sum");
  const double sq = total / (static_cast<double>(s) * static_cast<double>(s));
  return std::sqrt(std::max(0.0, sq));
}

/// KSD of the rows of `chain` at `indices` (a multiset).
inline double ksd(const Chain& chain, const std::vector<Index>& indices, const SteinKernelConfig& cfg) {
  if (indices.empty()) throw InputError("ksd of an empty subset");
  return ksd(chain.subset(indices), cfg);
}

struct ThinningResult {
  std::vector<Index> indices;          // selected rows, 0-based, in selection order
  std::vector<double> objective;       // greedy objective at each selection
  std::vector<double> ksd_trajectory;  // KSD of the first j + 1 selections
  SteinKernelConfig kernel_config;
};

/// Greedy KSD minimisation over the rows of a chain.
///
/// Step j selects the index minimising k_P(x_i, x_i) / 2 + sum_{j' < j}
/// k_P(x_pi(j'), x_i); ties go to the smallest index. The running sums are
/// kept as an n-vector updated with one kernel row per step, so the whole
/// run costs O(n m) kernel evaluations. m may exceed n, in which case the
/// selection contains repeats.
inline ThinningResult greedy_thin(const Chain& chain, const SteinKernelConfig& cfg, Index m) {
  if (m < 1) throw InputError("m must be at least 1");
  PreparedPoints prep(chain, cfg);
  const auto n = static_cast<std::size_t>(chain.size());

  std::vector<double> diag(n);
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) diag[i] = prep(static_cast<Index>(i), static_cast<Index>(i));
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(diag[i])) {
      throw NumericalError("non-finite Stein kernel value at pair (" + std::to_string(i) + ", " +
                           std::to_string(i) + ")");
    }
  }

  std::vector<double> running(n, 0.0);
  ThinningResult out{{}, {}, {}, cfg};
  out.indices.reserve(static_cast<std::size_t>(m));
  out.objective.reserve(static_cast<std::size_t>(m));
  out.ksd_trajectory.reserve(static_cast<std::size_t>(m));

  double pair_sum = 0.0;  // sum of k_P over all ordered pairs of selections
  for (Index j = 0; j < m; ++j) {
    const ArgMin best =
        parallel_argmin(n, [&](std::size_t i) { return 0.5 * diag[i] + running[i]; });
    const Index pick = static_cast<Index>(best.index);
    out.indices.push_back(pick);
    out.objective.push_back(best.value);
    pair_sum += 2.0 * best.value;
    out.ksd_trajectory.push_back(std::sqrt(std::max(0.0, pair_sum)) / static_cast<double>(j + 1));

    if (j + 1 == m) break;
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) running[i] += prep(pick, static_cast<Index>(i));
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(running[i])) {
        throw NumericalError("non-finite Stein kernel value at pair (" + std::to_string(pick) +
                             ", " + std::to_string(i) + ")");
      }
    }
  }
  return out;
}

/// Computable factor of the deterministic error bound for the thinned
/// estimator: the KSD of the final selection. The RKHS norm of the
/// integrand is not estimated here.
inline double error_bound_factor(const ThinningResult& result) {
  if (result.ksd_trajectory.empty()) throw InputError("empty thinning result");
  return result.ksd_trajectory.back();
}

/// Classical burn-in + thinning: keeps floor((n - b) / t) states, namely the
/// 0-based indices b + i t - 1 for i = 1, 2, ...
inline std::vector<Index> standard_thin(Index n, Index b, Index t) {
  if (b < 0 || b >= n) throw InputError("burn-in must satisfy 0 <= b < n");
  if (t < 1) throw InputError("thinning interval must be at least 1");
  const Index count = (n - b) / t;
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(count));
  for (Index i = 1; i <= count; ++i) idx.push_back(b + i * t - 1);
  return idx;
}

}  // namespace stein_thin
