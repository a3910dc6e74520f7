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

#include <cstdint>

#include "stein_thin/chain.hpp"
#include "stein_thin/samplers.hpp"

namespace stein_thin {

// A short random-walk chain on the default two-component mixture whose
// first `ramp_length` states are a straight line approaching the target
// from far away, mimicking a visible burn-in.
struct MixtureDemo {
  Chain chain;
  Index ramp_length;
};

inline MixtureDemo make_mixture_demo(std::uint64_t seed = 7, Index n = 500, Index ramp_length = 50,
                                     double step = 1.0) {
  const Target target = targets::default_mixture();
  const Vector far{{8.0, 8.0}};
  const Vector start{{4.0, 4.0}};
  const auto rw = mh_run(target, ProposalConfig::random_walk(2, step, Adaptation::none), start, n - ramp_length, seed);

  RowMatrix x(n, 2);
  RowMatrix g(n, 2);
  Vector lp(n);
  for (Index i = 0; i < ramp_length; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(ramp_length);
    const Vector p = far + t * (start - far);
    x.row(i) = p.transpose();
    g.row(i) = target.gradient(p).transpose();
    lp(i) = target.log_density(p);
  }
  x.bottomRows(n - ramp_length) = rw.chain.samples();
  g.bottomRows(n - ramp_length) = rw.chain.gradients();
  lp.tail(n - ramp_length) = *rw.chain.log_densities();
  return {Chain(std::move(x), std::move(g), std::move(lp)), ramp_length};
}

}  // namespace stein_thin
