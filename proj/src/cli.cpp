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

#include "tlqr/large_deviations.hpp"
#include "tlqr/simulator.hpp"
#include "tlqr/verification.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace tlqr
{

using nlohmann::json;

namespace
{

namespace fs = std::filesystem;

// Fine sweep grid: 0.001:0.001:0.1501.
constexpr double kFullGridStart = 0.001;
constexpr double kFullGridStep = 0.001;
constexpr double kFullGridEnd = 0.1501;

json number_or_null(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

class ArtifactWriter
{
public:
  explicit ArtifactWriter(const std::string & dir) : dir_(dir)
  {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw IoError("cannot create output directory '" + dir + "'");
    }
  }

  void write(const std::string & name, const std::function<void(std::ostream &)> & body)
  {
    const fs::path path = dir_ / name;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
      throw IoError("cannot open '" + path.string() + "' for writing");
    }
    body(os);
    os.flush();
    if (!os) {
      throw IoError("failed writing '" + path.string() + "'");
    }
    written_.push_back(name);
  }

  void write_json(const std::string & name, const json & j)
  {
    write(name, [&](std::ostream & os) { os << j.dump(2) << "\n"; });
  }

  const std::vector<std::string> & written() const { return written_; }

private:
  fs::path dir_;
  std::vector<std::string> written_;
};

json report_json(const PlannerReport & r)
{
  return {{"iterations", r.iterations},
          {"final_cost", number_or_null(r.final_cost)},
          {"terminal_position_error", number_or_null(r.terminal_position_error)},
          {"terminal_heading_error", number_or_null(r.terminal_heading_error)},
          {"gradient_norm", number_or_null(r.gradient_norm)},
          {"converged", r.converged},
          {"stop_reason", r.stop_reason},
          {"projected", r.projected},
          {"max_bound_excess", r.max_bound_excess},
          {"cost_history", r.cost_history}};
}

// Shared error handling: maps exception classes onto the exit-code contract.
int guarded(std::ostream & err, const std::function<int()> & body)
{
  try {
    return body();
  } catch (const ConfigError & e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError & e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalFailure & e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const InsufficientData & e) {
    err << "insufficient data: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const InvalidArgument & e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return kExitNotConverged;
  }
}

ExperimentConfig effective_config(const CommandOptions & options)
{
  ExperimentConfig config = load_config(options.config_path);
  if (options.seed) {
    config.master_seed = *options.seed;
  }
  return config;
}

RunManifest start_manifest(const std::string & command, const ExperimentConfig & config)
{
  RunManifest m;
  m.command = command;
  m.config_hash = config_hash(config);
  m.master_seed = config.master_seed;
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest & m, ArtifactWriter & writer)
{
  m.outputs = writer.written();
  m.finished_at = utc_timestamp();
  writer.write_json("manifest_" + m.command + ".json", m.to_json());
}

void warn_if_not_converged(const Experiment & e, std::ostream & err)
{
  if (!e.report.converged) {
    err << "planner did not converge (" << e.report.stop_reason << ", " << e.report.iterations
        << " iterations, gradient norm " << e.report.gradient_norm << ")\n";
  }
}

}  // namespace

unsigned resolve_threads(std::optional<unsigned> flag)
{
  if (flag) {
    if (*flag == 0) {
      throw ConfigError("--threads", "must be >= 1");
    }
    return *flag;
  }
  const char * env = std::getenv("TLQR_THREADS");
  if (env == nullptr || *env == '\0') {
    return 1;
  }
  unsigned value = 0;
  const char * end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw ConfigError("TLQR_THREADS", "must be a positive integer, got '" + std::string(env) + "'");
  }
  return value;
}

std::string utc_timestamp()
{
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char * epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json RunManifest::to_json() const
{
  return {{"command", command},         {"config_hash", config_hash}, {"tool_version", tool_version},
          {"master_seed", master_seed}, {"started_at", started_at},   {"finished_at", finished_at},
          {"outputs", outputs},         {"notes", notes}};
}

int cmd_plan(const CommandOptions & options, std::ostream & out, std::ostream & err)
{
  return guarded(err, [&] {
    const ExperimentConfig config = effective_config(options);
    ArtifactWriter writer(options.out_dir);
    RunManifest manifest = start_manifest("plan", config);
    const Experiment e = build_experiment(config);
    const auto & plan = e.policy.nominal;

    writer.write("trajectory.csv",
                 [&](std::ostream & os) { write_trajectory_csv(os, *e.model, plan.states, plan.controls); });
    writer.write("gains.csv", [&](std::ostream & os) { write_gains_csv(os, e.policy); });
    json report = report_json(e.report);
    report["config_hash"] = manifest.config_hash;
    writer.write_json("planner_report.json", report);
    finish_manifest(manifest, writer);

    out << "plan: " << (e.report.converged ? "converged" : "not converged") << " after " << e.report.iterations
        << " iterations, cost " << e.report.final_cost << ", terminal position error "
        << e.report.terminal_position_error << "\n";
    warn_if_not_converged(e, err);
    return e.report.converged ? kExitOk : kExitNotConverged;
  });
}

int cmd_sweep(const CommandOptions & options, std::ostream & out, std::ostream & err)
{
  return guarded(err, [&] {
    if (options.mode != "both" && options.mode != "closed" && options.mode != "open") {
      throw ConfigError("--mode", "must be both, closed or open");
    }
    const ExperimentConfig config = effective_config(options);
    const unsigned threads = resolve_threads(options.threads);
    ArtifactWriter writer(options.out_dir);
    RunManifest manifest = start_manifest("sweep", config);
    const Experiment e = build_experiment(config);
    warn_if_not_converged(e, err);

    SweepSpec spec;
    spec.eps_start = options.full_grid ? kFullGridStart : config.sweep.eps_start;
    spec.eps_step = options.full_grid ? kFullGridStep : config.sweep.eps_step;
    spec.eps_end = options.full_grid ? kFullGridEnd : config.sweep.eps_end;
    spec.n_runs = config.sweep.n_runs;
    spec.master_seed = config.master_seed;
    spec.run_closed = options.mode != "open";
    spec.run_open = options.mode != "closed";
    spec.threads = threads;
    const SweepResult result = sweep_epsilon(e.policy, *e.model, spec);

    writer.write("sweep.csv", [&](std::ostream & os) { result.write_csv(os); });
    manifest.notes["nmse_norm"] = "stacked: |x^p - x|^2 / |x^p|^2 over all K+1 states, in percent";
    manifest.notes["grid"] = options.full_grid ? "full" : "config";
    manifest.notes["mode"] = options.mode;
    finish_manifest(manifest, writer);
    out << "sweep: " << result.rows.size() << " epsilon values x " << spec.n_runs << " runs (" << options.mode
        << ")\n";
    return e.report.converged ? kExitOk : kExitNotConverged;
  });
}

int cmd_verify(const CommandOptions & options, std::ostream & out, std::ostream & err)
{
  return guarded(err, [&] {
    const auto & suites = verification_suites();
    if (std::find(suites.begin(), suites.end(), options.suite) == suites.end()) {
      throw ConfigError("--suite", "unknown suite '" + options.suite + "' (lemmas|theorem3|ldp|riccati|all)");
    }
    const ExperimentConfig config = effective_config(options);
    const unsigned threads = resolve_threads(options.threads);
    ArtifactWriter writer(options.out_dir);
    RunManifest manifest = start_manifest("verify", config);
    const VerificationReport report = run_verification(options.suite, config, threads);

    writer.write_json("verify_" + options.suite + ".json", report_to_json(report));
    finish_manifest(manifest, writer);
    for (const auto & c : report.checks) {
      out << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << c.value << " (" << c.relation << " " << c.bound
          << ")\n";
    }
    out << "verify " << options.suite << ": " << (report.passed() ? "pass" : "FAIL") << "\n";
    return report.passed() ? kExitOk : kExitCheckFailed;
  });
}

int cmd_ldp(const CommandOptions & options, std::ostream & out, std::ostream & err)
{
  return guarded(err, [&] {
    const ExperimentConfig config = effective_config(options);
    const unsigned threads = resolve_threads(options.threads);
    ArtifactWriter writer(options.out_dir);
    RunManifest manifest = start_manifest("ldp", config);
    const Experiment e = build_experiment(config);
    warn_if_not_converged(e, err);

    const auto estimates = exit_sweep(e.policy, *e.model, config.ldp.delta, config.ldp.epsilons,
                                      config.ldp.horizon_index, config.ldp.n_runs, config.master_seed, threads);
    writer.write("exit_probabilities.csv", [&](std::ostream & os) { write_exit_csv(os, estimates); });

    int code = e.report.converged ? kExitOk : kExitNotConverged;
    json fit_json;
    try {
      const RateFit fit = fit_rate(estimates);
      fit_json = {{"slope", fit.slope},
                  {"intercept", fit.intercept},
                  {"r_squared", number_or_null(fit.r_squared)},
                  {"n_points", fit.n_points}};
      out << "ldp: slope " << fit.slope << ", r^2 " << fit.r_squared << " over " << fit.n_points << " points\n";
    } catch (const InsufficientData & ex) {
      fit_json = {{"error", ex.what()}};
      err << "insufficient data: " << ex.what() << "\n";
      code = kExitNotConverged;
    }
    fit_json["delta"] = config.ldp.delta;
    fit_json["horizon_index"] = config.ldp.horizon_index;
    writer.write_json("rate_fit.json", fit_json);
    finish_manifest(manifest, writer);
    return code;
  });
}

}  // namespace tlqr
