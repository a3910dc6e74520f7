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
#include <optional>
#include <string>
#include <utility>

#include "stein_thin/error.hpp"
#include "stein_thin/types.hpp"

namespace stein_thin {

/// MCMC output: n states with matched log-density gradients, one per row,
/// optionally with unnormalised log-densities. Validated on construction:
/// shapes agree and every entry is finite.
class Chain {
 public:
  Chain(RowMatrix samples, RowMatrix gradients, std::optional<Vector> log_densities = {})
      : samples_(std::move(samples)),
        gradients_(std::move(gradients)),
        log_densities_(std::move(log_densities)) {
    if (samples_.rows() < 1 || samples_.cols() < 1) throw InputError("chain must have n >= 1 and d >= 1");
    if (samples_.rows() != gradients_.rows() || samples_.cols() != gradients_.cols()) {
      throw InputError("samples and gradients must have the same shape");
    }
    if (log_densities_ && log_densities_->size() != samples_.rows()) {
      throw InputError("log-density column has the wrong length");
    }
    for (Index i = 0; i < samples_.rows(); ++i) {
      if (!samples_.row(i).allFinite()) throw InputError("non-finite state at row " + std::to_string(i));
      if (!gradients_.row(i).allFinite()) {
        throw InputError("non-finite gradient at row " + std::to_string(i));
      }
      if (log_densities_ && !std::isfinite((*log_densities_)(i))) {
        throw InputError("non-finite log-density at row " + std::to_string(i));
      }
    }
  }

  Index size() const { return samples_.rows(); }
  Index dimension() const { return samples_.cols(); }
  const RowMatrix& samples() const { return samples_; }
  const RowMatrix& gradients() const { return gradients_; }
  const std::optional<Vector>& log_densities() const { return log_densities_; }
  bool has_log_density() const { return log_densities_.has_value(); }

  /// Rows at the given indices, in order, duplicates kept.
  template <typename Indices>
  Chain subset(const Indices& idx) const {
    RowMatrix x(static_cast<Index>(idx.size()), dimension());
    RowMatrix g(static_cast<Index>(idx.size()), dimension());
    std::optional<Vector> lp;
    if (log_densities_) lp = Vector(static_cast<Index>(idx.size()));
    Index r = 0;
    for (auto i : idx) {
      const Index k = static_cast<Index>(i);
      if (k < 0 || k >= size()) throw InputError("index " + std::to_string(k) + " out of range");
      x.row(r) = samples_.row(k);
      g.row(r) = gradients_.row(k);
      if (lp) (*lp)(r) = (*log_densities_)(k);
      ++r;
    }
    return Chain(std::move(x), std::move(g), std::move(lp));
  }

 private:
  RowMatrix samples_;
  RowMatrix gradients_;
  std::optional<Vector> log_densities_;
};

}  // namespace stein_thin
