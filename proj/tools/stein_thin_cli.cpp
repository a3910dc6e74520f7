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

// Command line front-end: thin, ksd, weights, ed, diagnose, sample,
// benchmark. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 numerical error. Errors go to stderr as "stein_thin: error[<kind>]: ...".

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stein_thin/stein_thin.hpp"

namespace st = stein_thin;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output goes to `path`, or stdout when the path is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw st::InputError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

st::Vector parse_vector(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("cannot parse vector '" + text + "'");
    }
  }
  return Eigen::Map<st::Vector>(v.data(), static_cast<st::Index>(v.size()));
}

st::SteinKernelConfig kernel_from_flags(const std::string& pre, const std::string& gamma_path, const st::Chain& chain,
                                        st::Index m) {
  if (!gamma_path.empty()) {
    return st::build_preconditioner(st::Preconditioner::explicit_matrix, chain.samples(), m,
                                    st::io::read_matrix(gamma_path));
  }
  const auto setting = st::parse_preconditioner(pre);
  if (setting == st::Preconditioner::explicit_matrix) throw UsageError("--pre explicit requires --gamma");
  return st::build_preconditioner(setting, chain.samples(), m);
}

std::vector<st::Index> all_indices(st::Index n) {
  std::vector<st::Index> idx(static_cast<std::size_t>(n));
  for (st::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Greedy Stein thinning of MCMC output, with baselines and diagnostics"};
  app.require_subcommand(1);
  const std::vector<std::string> pre_choices{"med", "sclmed", "smpcov", "id", "explicit"};

  // thin
  auto* thin = app.add_subcommand("thin", "select m states by greedy KSD minimisation");
  std::string thin_in, thin_out, thin_pre = "sclmed", thin_gamma;
  long long thin_m = 0;
  thin->add_option("--in", thin_in, "chain CSV (x1..xd,g1..gd[,logp])")->required();
  thin->add_option("--m", thin_m, "number of states to select")->required();
  thin->add_option("--pre", thin_pre, "preconditioner")->check(CLI::IsMember(pre_choices));
  thin->add_option("--gamma", thin_gamma, "explicit preconditioner matrix (CSV, d rows)");
  thin->add_option("--out", thin_out, "output index file (default stdout)");

  // ksd
  auto* ksd = app.add_subcommand("ksd", "kernel Stein discrepancy of a chain or a subset of it");
  std::string ksd_in, ksd_idx, ksd_pre = "med", ksd_gamma;
  ksd->add_option("--in", ksd_in, "chain CSV")->required();
  ksd->add_option("--idx", ksd_idx, "index file selecting rows (default: all rows)");
  ksd->add_option("--pre", ksd_pre, "preconditioner (m = subset size)")->check(CLI::IsMember(pre_choices));
  ksd->add_option("--gamma", ksd_gamma, "explicit preconditioner matrix");

  // weights
  auto* weights = app.add_subcommand("weights", "KSD-optimal weights for selected states");
  std::string w_in, w_idx, w_mode = "simplex", w_pre = "med", w_gamma, w_out;
  double w_tol = 1e-10;
  int w_iter = 100000;
  weights->add_option("--in", w_in, "chain CSV")->required();
  weights->add_option("--idx", w_idx, "index file")->required();
  weights->add_option("--mode", w_mode, "simplex (nonnegative) or linear (signed)")
      ->check(CLI::IsMember({"simplex", "linear"}));
  weights->add_option("--pre", w_pre, "preconditioner")->check(CLI::IsMember(pre_choices));
  weights->add_option("--gamma", w_gamma, "explicit preconditioner matrix");
  weights->add_option("--tol", w_tol, "relative objective decrease at which the solver stops");
  weights->add_option("--max-iter", w_iter, "solver iteration cap");
  weights->add_option("--out", w_out, "output file (default stdout)");

  // ed
  auto* ed = app.add_subcommand("ed", "energy distance to a reference sample (up to a constant)");
  std::string ed_in, ed_ref, ed_idx;
  bool ed_euclidean = false;
  long long ed_cap = st::ReferenceSample::kDefaultCap;
  ed->add_option("--in", ed_in, "selected states (chain CSV or x1..xd CSV)")->required();
  ed->add_option("--ref", ed_ref, "reference states (chain CSV or x1..xd CSV)")->required();
  ed->add_option("--idx", ed_idx, "optional index file applied to --in");
  ed->add_flag("--euclidean", ed_euclidean, "use the identity instead of the reference covariance");
  ed->add_option("--cap", ed_cap, "maximum reference points in the cross term (seeded subsample)");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "R-hat convergence diagnostics and burn-in estimate");
  std::vector<std::string> d_chains;
  std::string d_method = "vk", d_variant = "multi", d_out;
  double d_alpha = 0.05, d_eps = 0.05;
  long long d_stride = 1000;
  diag->add_option("--chains", d_chains, "comma-separated chain CSV files")->required()->delimiter(',');
  diag->add_option("--method", d_method, "gr or vk")->check(CLI::IsMember({"gr", "vk"}));
  diag->add_option("--variant", d_variant, "uni (max over coordinates) or multi")->check(CLI::IsMember({"uni", "multi"}));
  diag->add_option("--alpha", d_alpha, "confidence level parameter");
  diag->add_option("--eps", d_eps, "relative precision");
  diag->add_option("--stride", d_stride, "evaluate every stride iterations");
  diag->add_option("--out", d_out, "output file (default stdout)");

  // sample
  auto* sample = app.add_subcommand("sample", "run a built-in Metropolis-Hastings sampler");
  std::string s_target = "gauss", s_sampler = "rw", s_out, s_x0, s_variances;
  long long s_n = 0, s_dim = 2, s_warmup = 1000, s_prelim = 10000;
  unsigned long long s_seed = 0;
  std::optional<double> s_eps;
  bool s_no_adapt = false;
  sample->add_option("--target", s_target, "gauss, aniso or mixture")->check(CLI::IsMember({"gauss", "aniso", "mixture"}));
  sample->add_option("--sampler", s_sampler, "rw, adarw or mala")->check(CLI::IsMember({"rw", "adarw", "mala"}));
  sample->add_option("--n", s_n, "number of recorded states")->required();
  sample->add_option("--seed", s_seed, "random seed");
  sample->add_option("--out", s_out, "output chain CSV (default stdout)");
  sample->add_option("--dim", s_dim, "dimension of the gauss target");
  sample->add_option("--variances", s_variances, "diagonal variances of the aniso target (default 100,1)");
  sample->add_option("--x0", s_x0, "starting point, comma separated (default origin)");
  sample->add_option("--eps", s_eps, "initial step size");
  sample->add_option("--warmup", s_warmup, "discarded tuning iterations");
  sample->add_option("--preliminary", s_prelim, "ADA-RW preliminary iterations");
  sample->add_flag("--no-adapt", s_no_adapt, "keep the step size fixed and record from x0");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "KSD and energy-distance curves: Stein thinning vs burn-in + thinning");
  std::string b_in, b_out, b_ref, b_pre = "sclmed";
  long long b_m = 0, b_stride = 0;
  bench->add_option("--in", b_in, "chain CSV")->required();
  bench->add_option("--m-max", b_m, "largest selection size")->required();
  bench->add_option("--out", b_out, "output curves CSV (default stdout)");
  bench->add_option("--ref", b_ref, "reference sample for energy distance (default: the chain itself)");
  bench->add_option("--pre", b_pre, "thinning preconditioner")->check(CLI::IsMember({"med", "sclmed", "smpcov", "id"}));
  bench->add_option("--stride", b_stride, "diagnostic stride for the baseline burn-in (default n/50)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "stein_thin: error[usage]: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*thin) {
      if (thin_m < 1) throw UsageError("--m must be at least 1");
      const auto chain = st::io::read_chain(thin_in);
      const auto cfg = kernel_from_flags(thin_pre, thin_gamma, chain, thin_m);
      const auto res = st::greedy_thin(chain, cfg, thin_m);
      Output out(thin_out);
      auto& os = out.stream();
      os << "# indices are 0-based rows of " << thin_in << "; pre=" << (thin_gamma.empty() ? thin_pre : "explicit")
         << '\n';
      os << "index,ksd,objective\n";
      for (std::size_t j = 0; j < res.indices.size(); ++j) {
        os << res.indices[j] << ',' << st::io::format_double(res.ksd_trajectory[j]) << ','
           << st::io::format_double(res.objective[j]) << '\n';
      }
    } else if (*ksd) {
      const auto chain = st::io::read_chain(ksd_in);
      const auto idx = ksd_idx.empty() ? all_indices(chain.size()) : st::io::read_indices(ksd_idx);
      if (idx.empty()) throw st::InputError("index file is empty");
      const auto cfg = kernel_from_flags(ksd_pre, ksd_gamma, chain, static_cast<st::Index>(idx.size()));
      std::cout << "m,ksd\n" << idx.size() << ',' << st::io::format_double(st::ksd(chain, idx, cfg)) << '\n';
    } else if (*weights) {
      const auto chain = st::io::read_chain(w_in);
      const auto idx = st::io::read_indices(w_idx);
      if (idx.empty()) throw st::InputError("index file is empty");
      const auto cfg = kernel_from_flags(w_pre, w_gamma, chain, static_cast<st::Index>(idx.size()));
      const auto points = chain.subset(idx);
      const auto w = w_mode == "simplex" ? st::simplex_weights(points, cfg, w_tol, w_iter)
                                         : st::linear_weights(points, cfg);
      Output out(w_out);
      auto& os = out.stream();
      os << "# mode=" << w_mode << " ksd=" << st::io::format_double(w.ksd) << " iterations=" << w.solver_iterations
         << " converged=" << (w.converged ? 1 : 0) << '\n';
      os << "index,weight\n";
      for (std::size_t j = 0; j < idx.size(); ++j) {
        os << idx[j] << ',' << st::io::format_double(w.values(static_cast<st::Index>(j))) << '\n';
      }
    } else if (*ed) {
      st::RowMatrix sel = st::io::read_points(ed_in);
      if (!ed_idx.empty()) {
        const auto idx = st::io::read_indices(ed_idx);
        st::RowMatrix picked(static_cast<st::Index>(idx.size()), sel.cols());
        for (std::size_t j = 0; j < idx.size(); ++j) {
          if (idx[j] >= sel.rows()) throw st::InputError("index " + std::to_string(idx[j]) + " out of range");
          picked.row(static_cast<st::Index>(j)) = sel.row(idx[j]);
        }
        sel = picked;
      }
      const st::RowMatrix ref_pts = st::io::read_points(ed_ref);
      const auto ref = ed_euclidean ? st::ReferenceSample::with_sigma(ref_pts, st::Matrix::Identity(ref_pts.cols(), ref_pts.cols()), ed_cap)
                                    : st::ReferenceSample::from_points(ref_pts, ed_cap);
      std::cout << "m,n,ed\n"
                << sel.rows() << ',' << ref.size() << ',' << st::io::format_double(st::energy_distance(sel, ref)) << '\n';
    } else if (*diag) {
      if (d_stride < 1) throw UsageError("--stride must be at least 1");
      std::vector<st::RowMatrix> chains;
      for (const auto& path : d_chains) chains.push_back(st::io::read_points(path));
      const auto method = d_method == "gr" ? st::RhatMethod::gr : st::RhatMethod::vk;
      if (method == st::RhatMethod::gr && chains.size() < 2) throw UsageError("--method gr needs at least 2 chains");
      const auto variant = d_variant == "uni" ? st::RhatVariant::univariate_max : st::RhatVariant::multivariate;
      const auto rep = st::estimate_burn_in(chains, method, variant, d_alpha, d_eps, d_stride);
      Output out(d_out);
      auto& os = out.stream();
      os << "iteration,rhat\n";
      for (const auto& [it, r] : rep.rhat_series) os << it << ',' << st::io::format_double(r) << '\n';
      os << "# method=" << d_method << " variant=" << d_variant << " chains=" << rep.chains
         << " delta=" << st::io::format_double(rep.delta) << " burn_in="
         << (rep.burn_in ? std::to_string(*rep.burn_in) : st::to_string(rep.status)) << '\n';
    } else if (*sample) {
      if (s_n < 1) throw UsageError("--n must be at least 1");
      st::Target target;
      if (s_target == "gauss") target = st::targets::standard_gaussian(s_dim);
      else if (s_target == "aniso") target = s_variances.empty() ? st::targets::anisotropic_gaussian()
                                                                 : st::targets::anisotropic_gaussian(parse_vector(s_variances));
      else target = st::targets::default_mixture();
      const st::Index d = target.dimension;
      const st::Vector x0 = s_x0.empty() ? st::Vector(st::Vector::Zero(d)) : parse_vector(s_x0);
      if (x0.size() != d) throw UsageError("--x0 must have " + std::to_string(d) + " entries");
      const auto adapt = s_no_adapt ? st::Adaptation::none : st::Adaptation::acceptance_rate_tuning;
      st::McmcRun run = [&] {
        if (s_sampler == "adarw") {
          if (s_no_adapt) throw UsageError("adarw always adapts");
          return st::ada_rw_run(target, x0, s_n, s_prelim, s_seed);
        }
        auto cfg = s_sampler == "mala" ? st::ProposalConfig::mala(d, s_eps.value_or(st::default_mala_step(d)), adapt)
                                       : st::ProposalConfig::random_walk(d, s_eps.value_or(st::default_rw_step(d)), adapt);
        cfg.warmup = s_warmup;
        return st::mh_run(target, cfg, x0, s_n, s_seed);
      }();
      Output out(s_out);
      st::io::write_chain(out.stream(), run.chain);
      std::cerr << "acceptance_rate=" << st::io::format_double(run.stats.acceptance_rate)
                << " step_scale=" << st::io::format_double(run.stats.step_scale)
                << (run.stats.covariance_fallback ? " covariance_fallback=1" : "") << '\n';
    } else if (*bench) {
      if (b_m < 1) throw UsageError("--m-max must be at least 1");
      const auto chain = st::io::read_chain(b_in);
      const auto ref = st::ReferenceSample::from_points(b_ref.empty() ? chain.samples() : st::io::read_points(b_ref));
      st::BenchmarkOptions opt;
      opt.m_max = b_m;
      opt.thinning_pre = st::parse_preconditioner(b_pre);
      opt.stride = b_stride;
      const auto res = st::run_benchmark(chain, ref, opt);
      Output out(b_out);
      st::write_benchmark(out.stream(), res);
    }
  } catch (const UsageError& e) {
    std::cerr << "stein_thin: error[usage]: " << e.what() << '\n';
    return kExitUsage;
  } catch (const st::NumericalError& e) {
    std::cerr << "stein_thin: error[numerical]: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const st::Error& e) {
    std::cerr << "stein_thin: error[data]: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
