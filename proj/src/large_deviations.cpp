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

#include "tlqr/large_deviations.hpp"

#include "tlqr/io.hpp"
#include "tlqr/parallel.hpp"
#include "tlqr/random.hpp"
#include "tlqr/simulator.hpp"
#include "tlqr/stats.hpp"

#include <cmath>
#include <sstream>

namespace tlqr
{

DriftField feedback_drift(const SystemModel & model, const TrackingPolicy & policy)
{
  DriftField field;
  field.dt = model.step_period();
  field.nominal = policy.nominal.states;
  const double dt = field.dt;
  field.drift = [&model, &policy, dt](int t, const Vec & x) -> Vec {
    return (model.transition(x, feedback_control(policy, t, x)) - x) / dt;
  };
  return field;
}

double action_functional(const DriftField & drift, const PathSample & path, double epsilon)
{
  if (!(epsilon > 0.0)) {
    throw InvalidArgument("action_functional: epsilon must be > 0");
  }
  if (path.path.size() < 2) {
    throw InvalidArgument("action_functional: path needs at least two points");
  }
  if (!(path.dt > 0.0)) {
    throw InvalidArgument("action_functional: dt must be > 0");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t + 1 < path.path.size(); ++t) {
    const Vec & phi = path.path[t];
    const Vec velocity = (path.path[t + 1] - phi) / path.dt;
    sum += (velocity - drift.drift(static_cast<int>(t), phi)).squaredNorm() * path.dt;
  }
  return sum / (2.0 * epsilon * epsilon);
}

std::pair<double, double> wilson_interval(int successes, int trials, double z)
{
  if (trials < 1 || successes < 0 || successes > trials) {
    throw InvalidArgument("wilson_interval: need 0 <= successes <= trials, trials >= 1");
  }
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // Endpoints are exact at p = 0 and p = 1; clamp round-off elsewhere.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, std::min(p, center - half));
  const double hi = successes == trials ? 1.0 : std::min(1.0, std::max(p, center + half));
  return {lo, hi};
}

ExitEstimate make_exit_estimate(double delta, double epsilon, int n_runs, int n_exits)
{
  ExitEstimate e;
  e.delta = delta;
  e.epsilon = epsilon;
  e.n_runs = n_runs;
  e.n_exits = n_exits;
  e.p_hat = static_cast<double>(n_exits) / n_runs;
  std::tie(e.wilson_lo, e.wilson_hi) = wilson_interval(n_exits, n_runs);
  return e;
}

std::vector<double> tube_deviations(const TrackingPolicy & policy, const SystemModel & model, double epsilon,
                                    int horizon_index, int n_runs, std::uint64_t seed, unsigned threads)
{
  if (n_runs < 1) {
    throw InvalidArgument("tube_deviations: n_runs must be >= 1");
  }
  if (horizon_index < 0 || horizon_index > policy.horizon()) {
    throw InvalidArgument("tube_deviations: horizon_index must lie in [0, K]");
  }
  std::vector<double> out(n_runs);
  parallel_for(static_cast<std::size_t>(n_runs), threads, [&](std::size_t j) {
    const auto run_seed = derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::kExit), j});
    const Rollout r = rollout(policy, model, epsilon, ExecutionMode::kClosedLoop, run_seed);
    double worst = 0.0;
    for (int s = 0; s <= horizon_index; ++s) {
      worst = std::max(worst, (r.states[s] - policy.nominal.states[s]).norm());
    }
    out[j] = worst;
  });
  return out;
}

ExitEstimate estimate_exit_probability(const TrackingPolicy & policy, const SystemModel & model, double delta,
                                       double epsilon, int horizon_index, int n_runs, std::uint64_t seed,
                                       unsigned threads)
{
  if (!(delta > 0.0)) {
    throw InvalidArgument("estimate_exit_probability: delta must be > 0");
  }
  const auto dev = tube_deviations(policy, model, epsilon, horizon_index, n_runs, seed, threads);
  int exits = 0;
  for (const double d : dev) {
    exits += d > delta ? 1 : 0;
  }
  return make_exit_estimate(delta, epsilon, n_runs, exits);
}

std::vector<ExitEstimate> exit_sweep(const TrackingPolicy & policy, const SystemModel & model, double delta,
                                     std::span<const double> epsilons, int horizon_index, int n_runs,
                                     std::uint64_t master_seed, unsigned threads)
{
  std::vector<ExitEstimate> out;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const auto seed = derive_seed(master_seed, {static_cast<std::uint64_t>(StreamTag::kExit), i});
    out.push_back(
      estimate_exit_probability(policy, model, delta, epsilons[i], horizon_index, n_runs, seed, threads));
  }
  return out;
}

RateFit fit_rate(std::span<const ExitEstimate> estimates)
{
  std::vector<double> x;
  std::vector<double> y;
  for (const auto & e : estimates) {
    if (e.p_hat > 0.0 && e.p_hat < 1.0 && e.epsilon > 0.0) {
      x.push_back(1.0 / (e.epsilon * e.epsilon));
      y.push_back(std::log(e.p_hat));
    }
  }
  if (x.size() < 3) {
    std::ostringstream os;
    os << "fit_rate: need at least 3 estimates with 0 < p_hat < 1, got " << x.size();
    throw InsufficientData(os.str());
  }
  const LinearFit fit = linear_fit(x, y);
  return {fit.slope, fit.intercept, fit.r_squared, static_cast<int>(x.size())};
}

void write_exit_csv(std::ostream & os, std::span<const ExitEstimate> estimates)
{
  os << "epsilon,delta,n_runs,n_exits,p_hat,wilson_lo,wilson_hi\n";
  for (const auto & e : estimates) {
    os << format_number(e.epsilon) << "," << format_number(e.delta) << "," << e.n_runs << "," << e.n_exits << ","
       << format_number(e.p_hat) << "," << format_number(e.wilson_lo) << "," << format_number(e.wilson_hi) << "\n";
  }
}

}  // namespace tlqr
