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

#include "tlqr/simulator.hpp"

#include "tlqr/io.hpp"
#include "tlqr/parallel.hpp"
#include "tlqr/random.hpp"
#include "tlqr/stats.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tlqr
{

std::string to_string(ExecutionMode mode)
{
  return mode == ExecutionMode::kClosedLoop ? "closed_loop" : "open_loop";
}

namespace
{

// Tail of `policy` re-planned from x at absolute time t.
TrackingPolicy replan_from(const SystemModel & model, const TrackingPolicy & active, int local_t, int absolute_t,
                           const Vec & x, const ReplanOptions & opts)
{
  const int remaining = active.horizon() - local_t;
  const VecSeq init(active.nominal.controls.begin() + local_t, active.nominal.controls.end());
  auto [plan, report] = optimize_nominal(model, opts.cost, x, remaining, init, opts.planner);
  return synthesize_policy(model, plan, opts.weights.tail(absolute_t));
}

}  // namespace

Rollout replay(const TrackingPolicy & policy, const SystemModel & model, const VecSeq & noises, ExecutionMode mode,
               const RolloutOptions & options)
{
  const int k = policy.horizon();
  if (static_cast<int>(noises.size()) != k) {
    throw InvalidArgument("replay: need exactly K noise vectors");
  }
  Rollout out;
  out.mode = mode;
  out.noises = noises;
  out.states.reserve(k + 1);
  out.controls.reserve(k);
  out.states.push_back(policy.nominal.states.front());

  std::optional<TrackingPolicy> replanned;
  const TrackingPolicy * active = &policy;
  int offset = 0;  // absolute time of the active policy's t = 0

  for (int t = 0; t < k; ++t) {
    const Vec & x = out.states.back();
    int local = t - offset;
    if (mode == ExecutionMode::kClosedLoop && options.replan && out.replans < options.replan->max_replans &&
        (x - active->nominal.states[local]).norm() > options.replan->threshold) {
      replanned = replan_from(model, *active, local, t, x, *options.replan);
      active = &*replanned;
      offset = t;
      local = 0;
      ++out.replans;
    }
    const Vec u = mode == ExecutionMode::kClosedLoop ? feedback_control(*active, local, x)
                                                     : active->bounds.clamp(active->nominal.controls[local]);
    out.controls.push_back(u);
    out.states.push_back(step_noisy(model, x, u, noises[t]));
  }
  return out;
}

Rollout rollout(const TrackingPolicy & policy, const SystemModel & model, double epsilon, ExecutionMode mode,
                std::uint64_t seed, const RolloutOptions & options)
{
  const int k = policy.horizon();
  const NoiseModel noise(epsilon, noise_scale(policy.nominal.controls), model.state_dim());
  Rng rng(seed);
  VecSeq noises(k);
  for (auto & w : noises) {
    w = noise.sample(rng);
  }
  Rollout out = replay(policy, model, noises, mode, options);
  out.seed = seed;
  return out;
}

double trajectory_nmse(const NominalTrajectory & planned, const VecSeq & states)
{
  if (states.size() != planned.states.size()) {
    throw InvalidArgument("nmse: run horizon differs from the planned trajectory");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < states.size(); ++t) {
    num += (planned.states[t] - states[t]).squaredNorm();
    den += planned.states[t].squaredNorm();
  }
  if (!(den > 0.0)) {
    throw DomainError("nmse: planned trajectory has zero norm (division by zero)");
  }
  return num / den * 100.0;
}

double nmse(const NominalTrajectory & planned, std::span<const Rollout> runs)
{
  if (runs.empty()) {
    throw InvalidArgument("nmse: need at least one run");
  }
  double total = 0.0;
  for (const auto & run : runs) {
    total += trajectory_nmse(planned, run.states);
  }
  return total / static_cast<double>(runs.size());
}

std::vector<double> epsilon_grid(double start, double step, double end)
{
  if (!(start > 0.0)) {
    throw InvalidArgument("epsilon grid: start must be > 0");
  }
  if (!(step > 0.0)) {
    throw InvalidArgument("epsilon grid: step must be > 0");
  }
  if (!(end >= start)) {
    throw InvalidArgument("epsilon grid: end must be >= start");
  }
  const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = start + static_cast<double>(i) * step;
  }
  return grid;
}

std::uint64_t sweep_seed(std::uint64_t master_seed, std::size_t grid_index, std::size_t run, ExecutionMode mode)
{
  const auto tag = mode == ExecutionMode::kClosedLoop ? StreamTag::kClosedLoop : StreamTag::kOpenLoop;
  return derive_seed(master_seed, {grid_index, run, static_cast<std::uint64_t>(tag)});
}

SweepResult sweep_epsilon(const TrackingPolicy & policy, const SystemModel & model, const SweepSpec & spec)
{
  if (spec.n_runs < 1) {
    throw InvalidArgument("sweep: n_runs must be >= 1");
  }
  const auto grid = epsilon_grid(spec.eps_start, spec.eps_step, spec.eps_end);
  const std::size_t runs = static_cast<std::size_t>(spec.n_runs);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<ExecutionMode> modes;
  if (spec.run_closed) {
    modes.push_back(ExecutionMode::kClosedLoop);
  }
  if (spec.run_open) {
    modes.push_back(ExecutionMode::kOpenLoop);
  }

  // values[m][i * runs + j]
  std::vector<std::vector<double>> values(modes.size(), std::vector<double>(grid.size() * runs));
  const std::size_t per_mode = grid.size() * runs;
  parallel_for(modes.size() * per_mode, spec.threads, [&](std::size_t task) {
    const std::size_t m = task / per_mode;
    const std::size_t i = (task % per_mode) / runs;
    const std::size_t j = task % runs;
    try {
      const Rollout r = rollout(policy, model, grid[i], modes[m], sweep_seed(spec.master_seed, i, j, modes[m]));
      values[m][i * runs + j] = trajectory_nmse(policy.nominal, r.states);
    } catch (const std::exception & e) {
      std::ostringstream os;
      os << "sweep failed at epsilon=" << format_number(grid[i]) << " (" << to_string(modes[m]) << ", run " << j
         << "): " << e.what();
      throw NumericalFailure(os.str());
    }
  });

  SweepResult result;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepRow row;
    row.epsilon = grid[i];
    row.n_runs = spec.n_runs;
    row.avg_nmse_closed = row.avg_nmse_open = row.sd_closed = row.sd_open = nan;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const std::span<const double> v(values[m].data() + i * runs, runs);
      if (modes[m] == ExecutionMode::kClosedLoop) {
        row.avg_nmse_closed = mean(v);
        row.sd_closed = sample_sd(v);
      } else {
        row.avg_nmse_open = mean(v);
        row.sd_open = sample_sd(v);
      }
    }
    result.rows.push_back(row);
  }
  return result;
}

void SweepResult::write_csv(std::ostream & os) const
{
  os << "epsilon,avg_nmse_closed_pct,avg_nmse_open_pct,sd_closed,sd_open,n_runs\n";
  for (const auto & r : rows) {
    os << format_number(r.epsilon) << "," << format_number(r.avg_nmse_closed) << ","
       << format_number(r.avg_nmse_open) << "," << format_number(r.sd_closed) << "," << format_number(r.sd_open)
       << "," << r.n_runs << "\n";
  }
}

void write_trajectory_csv(std::ostream & os, const SystemModel & model, const VecSeq & states,
                          const VecSeq & controls)
{
  if (states.size() != controls.size() + 1) {
    throw InvalidArgument("write_trajectory_csv: need K+1 states for K controls");
  }
  os << "t";
  for (const auto & n : model.state_names()) {
    os << "," << n;
  }
  for (const auto & n : model.control_names()) {
    os << "," << n;
  }
  os << "\n";
  for (std::size_t t = 0; t < states.size(); ++t) {
    os << t;
    for (Eigen::Index i = 0; i < states[t].size(); ++i) {
      os << "," << format_number(states[t][i]);
    }
    for (int i = 0; i < model.control_dim(); ++i) {
      os << "," << (t < controls.size() ? format_number(controls[t][i]) : "nan");
    }
    os << "\n";
  }
}

}  // namespace tlqr
