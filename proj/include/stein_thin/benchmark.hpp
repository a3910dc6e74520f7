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
#include <limits>
#include <ostream>
#include <set>
#include <vector>

#include "stein_thin/chain.hpp"
#include "stein_thin/diagnostics.hpp"
#include "stein_thin/io.hpp"
#include "stein_thin/kernel.hpp"
#include "stein_thin/metrics.hpp"
#include "stein_thin/thinning.hpp"
#include "stein_thin/weights.hpp"

namespace stein_thin {

// Side-by-side comparison of greedy Stein thinning with burn-in removal +
// uniform thinning, across selection sizes m = 1..m_max.

struct BenchmarkOptions {
  Index m_max = 100;
  Preconditioner thinning_pre = Preconditioner::sclmed;  // built with m = m_max
  // Burn-in for the baseline: VK diagnostic on the single chain.
  RhatVariant variant = RhatVariant::multivariate;
  double alpha = 0.05;
  double epsilon = 0.05;
  Index stride = 0;  // 0: n / 50, at least 27
  int weight_iterations = 20000;
};

struct BaselineBurnIn {
  DiagnosticReport report;
  Index burn_in = 0;  // value used by the baseline
};

/// Burn-in for the uniform-thinning baseline. When the VK diagnostic never
/// drops below 1 + delta, the first half of the chain is discarded.
inline BaselineBurnIn baseline_burn_in(const Chain& chain, const BenchmarkOptions& opt) {
  const Index n = chain.size();
  const Index stride = opt.stride > 0 ? opt.stride : std::max<Index>(kMinLugsailLength, n / 50);
  const RowMatrix samples = chain.samples();
  BaselineBurnIn out;
  out.report = estimate_burn_in(std::span<const RowMatrix>(&samples, 1), RhatMethod::vk, opt.variant, opt.alpha,
                                opt.epsilon, stride);
  if (out.report.status == BurnInStatus::reached && *out.report.burn_in < n) {
    out.burn_in = *out.report.burn_in;
  } else {
    out.burn_in = n / 2;
  }
  return out;
}

/// First m indices of burn-in + thinning with t = floor((n - b) / m).
inline std::vector<Index> baseline_selection(Index n, Index burn_in, Index m) {
  const Index t = std::max<Index>(1, (n - burn_in) / m);
  auto idx = standard_thin(n, burn_in, t);
  if (static_cast<Index>(idx.size()) > m) idx.resize(static_cast<std::size_t>(m));
  return idx;
}

struct BenchmarkRow {
  Index m = 0;
  double ksd_stein = 0.0;
  double ksd_standard = 0.0;
  double ksd_simplex_weighted = 0.0;
  double ksd_linear_weighted = 0.0;  // NaN when the linear weights are undefined
  double ed_stein = 0.0;
  double ed_standard = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  Index burn_in = 0;
  BurnInStatus burn_in_status = BurnInStatus::not_evaluable;
  ThinningResult thinning;
};

/// KSD columns use the med kernel over the whole chain, whatever the
/// thinning preconditioner. The weighted columns re-weight the distinct
/// Stein-thinned points. ED is measured against `reference`.
inline BenchmarkResult run_benchmark(const Chain& chain, const ReferenceSample& reference, const BenchmarkOptions& opt) {
  if (opt.m_max < 1) throw InputError("m_max must be at least 1");
  const Index n = chain.size();
  const auto thin_cfg = build_preconditioner(opt.thinning_pre, chain.samples(), opt.m_max);
  const auto eval_cfg = build_preconditioner(Preconditioner::med, chain.samples(), opt.m_max);
  BenchmarkResult out{{}, 0, BurnInStatus::not_evaluable, greedy_thin(chain, thin_cfg, opt.m_max)};
  const auto base = baseline_burn_in(chain, opt);
  out.burn_in = base.burn_in;
  out.burn_in_status = base.report.status;

  // Running pair sums under the evaluation kernel for the Stein selection.
  PreparedPoints prep(chain, eval_cfg);
  double pair_sum = 0.0;
  std::vector<Index> distinct;
  for (Index m = 1; m <= opt.m_max; ++m) {
    const std::vector<Index> prefix(out.thinning.indices.begin(), out.thinning.indices.begin() + m);
    const Index last = prefix.back();
    for (Index j = 0; j + 1 < m; ++j) pair_sum += 2.0 * prep(prefix[static_cast<std::size_t>(j)], last);
    pair_sum += prep(last, last);
    if (std::find(distinct.begin(), distinct.end(), last) == distinct.end()) distinct.push_back(last);

    BenchmarkRow row;
    row.m = m;
    row.ksd_stein = std::sqrt(std::max(0.0, pair_sum)) / static_cast<double>(m);
    const auto baseline = baseline_selection(n, out.burn_in, m);
    row.ksd_standard = ksd(chain, baseline, eval_cfg);

    const Chain unique_points = chain.subset(distinct);
    const Matrix gram = stein_gram(unique_points, eval_cfg);
    row.ksd_simplex_weighted = simplex_weights_from_gram(gram, 1e-10, opt.weight_iterations).ksd;
    try {
      row.ksd_linear_weighted = linear_weights_from_gram(gram).ksd;
    } catch (const NumericalError&) {
      row.ksd_linear_weighted = std::numeric_limits<double>::quiet_NaN();
    }
    row.ed_stein = energy_distance(chain.subset(prefix).samples(), reference);
    row.ed_standard = energy_distance(chain.subset(baseline).samples(), reference);
    out.rows.push_back(row);
  }
  return out;
}

inline void write_benchmark(std::ostream& out, const BenchmarkResult& res) {
  out << "# burn_in=" << res.burn_in << " vk_status=" << to_string(res.burn_in_status) << '\n';
  out << "m,ksd_stein,ksd_standard,ksd_wstar,ksd_vstar,ed_stein,ed_standard\n";
  for (const auto& r : res.rows) {
    out << r.m << ',' << io::format_double(r.ksd_stein) << ',' << io::format_double(r.ksd_standard) << ','
        << io::format_double(r.ksd_simplex_weighted) << ','
        << (std::isnan(r.ksd_linear_weighted) ? std::string("nan") : io::format_double(r.ksd_linear_weighted)) << ','
        << io::format_double(r.ed_stein) << ',' << io::format_double(r.ed_standard) << '\n';
  }
}

}  // namespace stein_thin
