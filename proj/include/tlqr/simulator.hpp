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

#ifndef TLQR__SIMULATOR_HPP_
#define TLQR__SIMULATOR_HPP_

#include "tlqr/dynamics.hpp"
#include "tlqr/lqr.hpp"
#include "tlqr/planner.hpp"
#include "tlqr/types.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace tlqr
{

enum class ExecutionMode { kClosedLoop, kOpenLoop };

std::string to_string(ExecutionMode mode);

/// Re-plans from the current state when the tracking error exceeds `threshold`.
struct ReplanOptions
{
  double threshold = 0.0;
  int max_replans = 5;
  CostSpec cost;
  LqrWeights weights;  // full-horizon weights; the tail is used after a replan
  PlannerOptions planner;
};

struct RolloutOptions
{
  std::optional<ReplanOptions> replan;
};

struct Rollout
{
  VecSeq states;    // K+1
  VecSeq controls;  // K, as applied (after clamping)
  VecSeq noises;    // K
  std::uint64_t seed = 0;
  ExecutionMode mode = ExecutionMode::kClosedLoop;
  int replans = 0;
};

/// Executes the policy on the nonlinear model with i.i.d. Gaussian noise of standard
/// deviation epsilon * max_t |u^o_t| per component, drawn from a stream seeded by `seed`.
/// Closed loop applies feedback_control(); open loop applies the clamped u^o_t.
Rollout rollout(const TrackingPolicy & policy, const SystemModel & model, double epsilon, ExecutionMode mode,
                std::uint64_t seed, const RolloutOptions & options = {});

/// Deterministic execution for a given noise sequence.
Rollout replay(const TrackingPolicy & policy, const SystemModel & model, const VecSeq & noises, ExecutionMode mode,
               const RolloutOptions & options = {});

/// |x^p - x^j|^2 / |x^p|^2 * 100 for one run, with all K+1 states stacked.
double trajectory_nmse(const NominalTrajectory & planned, const VecSeq & states);

/// Average of trajectory_nmse over runs, in percent.
double nmse(const NominalTrajectory & planned, std::span<const Rollout> runs);

/// start + i * step for every i with start + i * step <= end (within 1e-9 * step).
std::vector<double> epsilon_grid(double start, double step, double end);

struct SweepSpec
{
  double eps_start = 0.01;
  double eps_step = 0.01;
  double eps_end = 0.15;
  int n_runs = 100;
  std::uint64_t master_seed = 0;
  bool run_closed = true;
  bool run_open = true;
  unsigned threads = 1;
};

struct SweepRow
{
  double epsilon = 0.0;
  double avg_nmse_closed = 0.0;
  double avg_nmse_open = 0.0;
  double sd_closed = 0.0;
  double sd_open = 0.0;
  int n_runs = 0;
};

struct SweepResult
{
  std::vector<SweepRow> rows;

  /// epsilon,avg_nmse_closed_pct,avg_nmse_open_pct,sd_closed,sd_open,n_runs
  void write_csv(std::ostream & os) const;
};

/// Seed of run j at grid index i for the given mode.
std::uint64_t sweep_seed(std::uint64_t master_seed, std::size_t grid_index, std::size_t run, ExecutionMode mode);

/// Runs n_runs rollouts per epsilon and mode; modes that are switched off report NaN.
SweepResult sweep_epsilon(const TrackingPolicy & policy, const SystemModel & model, const SweepSpec & spec);

/// t, state components, control components; the terminal row has "nan" controls.
void write_trajectory_csv(std::ostream & os, const SystemModel & model, const VecSeq & states,
                          const VecSeq & controls);

}  // namespace tlqr

#endif  // TLQR__SIMULATOR_HPP_
