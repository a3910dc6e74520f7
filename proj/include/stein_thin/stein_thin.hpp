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

// Umbrella header.

#include <string>
#include <vector>

#include "stein_thin/benchmark.hpp"
#include "stein_thin/chain.hpp"
#include "stein_thin/demo.hpp"
#include "stein_thin/diagnostics.hpp"
#include "stein_thin/error.hpp"
#include "stein_thin/io.hpp"
#include "stein_thin/kernel.hpp"
#include "stein_thin/metrics.hpp"
#include "stein_thin/samplers.hpp"
#include "stein_thin/special.hpp"
#include "stein_thin/thinning.hpp"
#include "stein_thin/weights.hpp"

namespace stein_thin {

/// Indices (0-based) of m states selected by greedy Stein thinning, with the
/// preconditioner chosen by name: "sclmed" (default), "med", "smpcov", "id".
inline std::vector<Index> thin(const RowMatrix& samples, const RowMatrix& gradients, Index m,
                               const std::string& pre = "sclmed") {
  const Chain chain(samples, gradients);
  const auto cfg = build_preconditioner(parse_preconditioner(pre), chain.samples(), m);
  return greedy_thin(chain, cfg, m).indices;
}

}  // namespace stein_thin
