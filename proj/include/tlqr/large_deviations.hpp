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

#ifndef TLQR__LARGE_DEVIATIONS_HPP_
#define TLQR__LARGE_DEVIATIONS_HPP_

#include "tlqr/dynamics.hpp"
#include "tlqr/lqr.hpp"
#include "tlqr/types.hpp"

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace tlqr
{

/// Drift b(t, x) of a small-noise process on the step grid, plus the path it fixes.
struct DriftField
{
  std::function<Vec(int, const Vec &)> drift;
  double dt = 1.0;
  VecSeq nominal;
};

/// b(t, x) = (g(t, x) - x) / dt with g(t, x) = f(x, clamp(u^o_t - L_t (x - x^o_t))).
DriftField feedback_drift(const SystemModel & model, const TrackingPolicy & policy);

struct PathSample
{
  VecSeq path;
  double dt = 1.0;
};

/// S(phi) = 1 / (2 eps^2) * sum_t |(phi_{t+1} - phi_t) / dt - b(t, phi_t)|^2 dt
/// (left-endpoint Riemann sum).
double action_functional(const DriftField & drift, const PathSample & path, double epsilon);

struct ExitEstimate
{
  double delta = 0.0;
  double epsilon = 0.0;
  int n_runs = 0;
  int n_exits = 0;
  double p_hat = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
};

inline constexpr double kWilsonZ95 = 1.959963984540054;

std::pair<double, double> wilson_interval(int successes, int trials, double z = kWilsonZ95);

ExitEstimate make_exit_estimate(double delta, double epsilon, int n_runs, int n_exits);

/// Per-run max_{s <= horizon_index} |x_s - x^o_s| of closed-loop rollouts; run j
/// uses the stream derived from (seed, j).
std::vector<double> tube_deviations(const TrackingPolicy & policy, const SystemModel & model, double epsilon,
                                    int horizon_index, int n_runs, std::uint64_t seed, unsigned threads = 1);

/// Fraction of closed-loop runs that leave the delta-tube around the nominal by
/// step horizon_index. delta = +inf never exits.
ExitEstimate estimate_exit_probability(const TrackingPolicy & policy, const SystemModel & model, double delta,
                                       double epsilon, int horizon_index, int n_runs, std::uint64_t seed,
                                       unsigned threads = 1);

/// One estimate per epsilon; grid point i uses the stream derived from (master_seed, i).
std::vector<ExitEstimate> exit_sweep(const TrackingPolicy & policy, const SystemModel & model, double delta,
                                     std::span<const double> epsilons, int horizon_index, int n_runs,
                                     std::uint64_t master_seed, unsigned threads = 1);

struct RateFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

/// Least squares of ln(p_hat) on 1 / eps^2 over estimates with 0 < p_hat < 1.
RateFit fit_rate(std::span<const ExitEstimate> estimates);

/// epsilon,delta,n_runs,n_exits,p_hat,wilson_lo,wilson_hi
void write_exit_csv(std::ostream & os, std::span<const ExitEstimate> estimates);

}  // namespace tlqr

#endif  // TLQR__LARGE_DEVIATIONS_HPP_
