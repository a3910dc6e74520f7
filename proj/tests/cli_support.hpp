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

// Helpers for driving the command line tool from tests.

#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace clitest {

namespace fs = std::filesystem;

inline std::string binary() { return STEIN_THIN_CLI; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs the tool with `args` under the given thread count. Stdout and stderr
/// are captured to `out` and `err`. Returns the exit status.
inline int run(const std::string& args, const fs::path& out, const fs::path& err, int threads = 1) {
  const std::string cmd = "STEIN_THIN_THREADS=" + std::to_string(threads) + " '" + binary() + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

/// Every subcommand, in dependency order. "@" stands for the working directory.
inline std::vector<std::string> scenario() {
  return {
      "sample --target mixture --sampler rw --n 5000 --seed 3 --x0 4,4 --out @/chain.csv",
      "sample --target mixture --sampler mala --n 3000 --seed 4 --out @/ref.csv",
      "sample --target aniso --sampler adarw --n 1000 --preliminary 2000 --seed 5 --out @/aniso.csv",
      "sample --target gauss --dim 2 --sampler rw --n 3000 --seed 6 --x0 3,3 --out @/a.csv",
      "sample --target gauss --dim 2 --sampler rw --n 3000 --seed 7 --x0 -3,-3 --out @/b.csv",
      "thin --in @/chain.csv --m 30 --out @/idx.csv",
      "thin --in @/chain.csv --m 10 --pre smpcov",
      "thin --in @/aniso.csv --m 12 --pre med",
      "ksd --in @/chain.csv --idx @/idx.csv",
      "ksd --in @/aniso.csv --pre id",
      "weights --in @/chain.csv --idx @/idx.csv --mode simplex --out @/w.csv",
      "weights --in @/chain.csv --idx @/idx.csv --mode linear",
      "ed --in @/chain.csv --ref @/ref.csv --idx @/idx.csv",
      "ed --in @/chain.csv --ref @/ref.csv --euclidean --cap 1000",
      "diagnose --chains @/a.csv,@/b.csv --method vk --variant multi --stride 500 --out @/diag.csv",
      "diagnose --chains @/a.csv,@/b.csv --method gr --variant uni --stride 300",
      "benchmark --in @/chain.csv --m-max 40 --out @/curves.csv",
  };
}

inline std::string expand(std::string args, const fs::path& dir) {
  const std::string d = dir.string();
  for (std::size_t p = args.find('@'); p != std::string::npos; p = args.find('@', p + d.size())) {
    args.replace(p, 1, d);
  }
  return args;
}

/// Runs the scenario in a fresh `dir`. Returns the first failing command, or
/// an empty string.
inline std::string run_scenario(const fs::path& dir, int threads) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto steps = scenario();
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto tag = "step" + std::to_string(k);
    if (run(expand(steps[k], dir), dir / (tag + ".out"), dir / (tag + ".err"), threads) != 0) return steps[k];
  }
  return {};
}

/// Names of files whose contents differ between the two directories
/// (including files present in only one).
inline std::vector<std::string> differing_files(const fs::path& a, const fs::path& b) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    if (!fs::exists(b / name) || slurp(e.path()) != slurp(b / name)) out.push_back(name.string());
  }
  for (const auto& e : fs::directory_iterator(b)) {
    if (!fs::exists(a / e.path().filename())) out.push_back(e.path().filename().string());
  }
  return out;
}

/// Runs the scenario at 1 thread and at `threads`, both in `base`/work so
/// embedded paths agree, and returns the differing file names. A failing
/// command is reported as "failed: <command>".
inline std::vector<std::string> compare_thread_counts(const fs::path& base, int threads) {
  const fs::path work = base / "work";
  const fs::path single = base / "single";
  if (auto bad = run_scenario(work, 1); !bad.empty()) return {"failed: " + bad};
  fs::remove_all(single);
  fs::rename(work, single);
  if (auto bad = run_scenario(work, threads); !bad.empty()) return {"failed: " + bad};
  return differing_files(single, work);
}

}  // namespace clitest
