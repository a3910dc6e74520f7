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

// Runs a short random walk on a two-component Gaussian mixture, thins it to
// 40 states and compares the result with burn-in removal + thinning.

#include <iostream>

#include "stein_thin/stein_thin.hpp"

int main() {
  using namespace stein_thin;

  const auto demo = make_mixture_demo();
  const Chain& chain = demo.chain;

  const auto idx = thin(chain.samples(), chain.gradients(), 40);

  const auto cfg = build_preconditioner(Preconditioner::sclmed, chain.samples(), 40);
  BenchmarkOptions opt;
  opt.m_max = 40;
  const auto base = baseline_burn_in(chain, opt);
  const auto uniform = baseline_selection(chain.size(), base.burn_in, 40);

  int left = 0;
  for (Index i : idx) left += chain.samples()(i, 0) < 0.0;
  std::cout << "selected " << idx.size() << " of " << chain.size() << " states; " << left << " in the left component\n";
  std::cout << "KSD stein thinning:   " << ksd(chain, idx, cfg) << '\n';
  std::cout << "KSD burn-in + thin:   " << ksd(chain, uniform, cfg) << " (b = " << base.burn_in << ")\n";
  return 0;
}
