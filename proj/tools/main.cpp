// Copyright 2026 The tlqr Authors
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

#include "tlqr/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

int main(int argc, char ** argv)
{
  CLI::App app{"Trajectory-optimized LQR: planning, tracking and separation experiments"};
  app.set_version_flag("--version", tlqr::kToolVersion);
  app.require_subcommand(1);

  tlqr::CommandOptions opts;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  const auto common = [&](CLI::App * cmd, bool parallel) {
    cmd->add_option("--config", opts.config_path, "experiment configuration (JSON)")->required();
    cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", seed, "override master_seed");
    if (parallel) {
      cmd->add_option("--threads", threads, "worker threads (falls back to TLQR_THREADS, then 1)");
    }
  };

  auto * plan = app.add_subcommand("plan", "optimize the nominal trajectory and synthesize LQR gains");
  common(plan, false);

  auto * sweep = app.add_subcommand("sweep", "closed/open-loop NMSE versus noise level");
  common(sweep, true);
  sweep->add_flag("--full-grid", opts.full_grid, "use the 0.001:0.001:0.1501 grid");
  sweep->add_option("--mode", opts.mode, "both|closed|open")
    ->check(CLI::IsMember({"both", "closed", "open"}))
    ->capture_default_str();

  auto * verify = app.add_subcommand("verify", "run property suites and write a JSON report");
  common(verify, true);
  verify->add_option("--suite", opts.suite, "lemmas|theorem3|ldp|riccati|all")->capture_default_str();

  auto * ldp = app.add_subcommand("ldp", "exit probabilities and exponential-rate fit");
  common(ldp, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? tlqr::kExitOk : tlqr::kExitConfig;
  }

  for (auto * cmd : app.get_subcommands()) {
    if (cmd->count("--seed") > 0) {
      opts.seed = seed;
    }
    if (cmd->get_option_no_throw("--threads") != nullptr && cmd->count("--threads") > 0) {
      opts.threads = threads;
    }
  }

  if (plan->parsed()) {
    return tlqr::cmd_plan(opts, std::cout, std::cerr);
  }
  if (sweep->parsed()) {
    return tlqr::cmd_sweep(opts, std::cout, std::cerr);
  }
  if (verify->parsed()) {
    return tlqr::cmd_verify(opts, std::cout, std::cerr);
  }
  return tlqr::cmd_ldp(opts, std::cout, std::cerr);
}
