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

#include "tlqr/experiment.hpp"
#include "tlqr/simulator.hpp"
#include "tlqr/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

using namespace tlqr;

namespace
{

const Experiment & car_experiment()
{
  static const Experiment e = build_experiment(ExperimentConfig{});
  return e;
}

int count_lines(const std::string & s)
{
  int n = 0;
  for (const char c : s) {
    n += c == '\n' ? 1 : 0;
  }
  return n;
}

}  // namespace

TEST_CASE("zero noise reproduces the nominal in both modes")
{
  const auto & e = car_experiment();
  for (const auto mode : {ExecutionMode::kClosedLoop, ExecutionMode::kOpenLoop}) {
    const Rollout r = rollout(e.policy, *e.model, 0.0, mode, 1);
    REQUIRE(r.states.size() == e.policy.nominal.states.size());
    for (std::size_t t = 0; t < r.states.size(); ++t) {
      CHECK((r.states[t] - e.policy.nominal.states[t]).norm() <= 1e-12);
    }
    CHECK(trajectory_nmse(e.policy.nominal, r.states) <= 1e-20);
  }
}

TEST_CASE("rollouts replay bit-exactly from their seed")
{
  const auto & e = car_experiment();
  const Rollout a = rollout(e.policy, *e.model, 0.1, ExecutionMode::kClosedLoop, 1234);
  const Rollout b = rollout(e.policy, *e.model, 0.1, ExecutionMode::kClosedLoop, 1234);
  const Rollout c = replay(e.policy, *e.model, a.noises, ExecutionMode::kClosedLoop);
  for (std::size_t t = 0; t < a.states.size(); ++t) {
    CHECK(a.states[t] == b.states[t]);
    CHECK(a.states[t] == c.states[t]);
  }
  CHECK(a.seed == 1234);
  const Rollout d = rollout(e.policy, *e.model, 0.1, ExecutionMode::kClosedLoop, 1235);
  CHECK(d.states.back() != a.states.back());
}

TEST_CASE("applied controls always respect the bounds")
{
  const auto & e = car_experiment();
  const auto & bounds = e.model->control_bounds();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto mode : {ExecutionMode::kClosedLoop, ExecutionMode::kOpenLoop}) {
      const Rollout r = rollout(e.policy, *e.model, 0.5, mode, seed);
      for (const auto & u : r.controls) {
        CHECK(bounds.contains(u));
      }
    }
  }
}

TEST_CASE("open loop applies the planned controls")
{
  const auto & e = car_experiment();
  const Rollout r = rollout(e.policy, *e.model, 0.1, ExecutionMode::kOpenLoop, 3);
  for (int t = 0; t < e.policy.horizon(); ++t) {
    CHECK(r.controls[t] == e.policy.bounds.clamp(e.policy.nominal.controls[t]));
  }
}

TEST_CASE("nmse examples")
{
  NominalTrajectory planned;
  planned.states = {(Vec(2) << 1.0, 0.0).finished(), (Vec(2) << 0.0, 1.0).finished()};
  planned.controls = {Vec::Zero(1)};
  // |x^p - x|^2 = 2 against |x^p|^2 = 2, so 100%.
  CHECK(trajectory_nmse(planned, {Vec::Zero(2), (Vec(2) << 1.0, 1.0).finished()}) == doctest::Approx(100.0));
  CHECK(trajectory_nmse(planned, planned.states) == 0.0);

  // One percent: the deviation norm squared is 0.02 against 2.
  const VecSeq near{(Vec(2) << 1.1, 0.0).finished(), (Vec(2) << 0.0, 1.1).finished()};
  CHECK(trajectory_nmse(planned, near) == doctest::Approx(1.0));

  NominalTrajectory zero;
  zero.states = {Vec::Zero(2), Vec::Zero(2)};
  zero.controls = {Vec::Zero(1)};
  CHECK_THROWS_AS(trajectory_nmse(zero, planned.states), DomainError);
  CHECK_THROWS_AS(trajectory_nmse(planned, {Vec::Zero(2)}), InvalidArgument);
}

TEST_CASE("epsilon grids")
{
  const auto desk = epsilon_grid(0.01, 0.01, 0.15);
  REQUIRE(desk.size() == 15);
  CHECK(desk.front() == doctest::Approx(0.01));
  CHECK(desk.back() == doctest::Approx(0.15));
  CHECK(epsilon_grid(0.001, 0.001, 0.1501).size() == 150);
  CHECK(epsilon_grid(0.05, 0.01, 0.05).size() == 1);
  CHECK_THROWS_AS(epsilon_grid(0.0, 0.01, 0.1), InvalidArgument);
  CHECK_THROWS_AS(epsilon_grid(0.01, 0.0, 0.1), InvalidArgument);
  CHECK_THROWS_AS(epsilon_grid(0.1, 0.01, 0.05), InvalidArgument);
}

TEST_CASE("sweep CSV schema and mode switches")
{
  const auto & e = car_experiment();
  SweepSpec spec;
  spec.n_runs = 10;
  spec.master_seed = 5;
  const auto both = sweep_epsilon(e.policy, *e.model, spec);
  std::ostringstream os;
  both.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("epsilon,avg_nmse_closed_pct,avg_nmse_open_pct,sd_closed,sd_open,n_runs\n", 0) == 0);
  CHECK(count_lines(csv) == 16);

  spec.run_open = false;
  const auto closed = sweep_epsilon(e.policy, *e.model, spec);
  std::ostringstream oc;
  closed.write_csv(oc);
  CHECK(oc.str().find(",nan,") != std::string::npos);
  for (std::size_t i = 0; i < closed.rows.size(); ++i) {
    CHECK(std::isnan(closed.rows[i].avg_nmse_open));
    CHECK(closed.rows[i].avg_nmse_closed == both.rows[i].avg_nmse_closed);
  }
}

TEST_CASE("sweep output is identical across thread counts")
{
  const auto & e = car_experiment();
  SweepSpec spec;
  spec.n_runs = 20;
  spec.master_seed = 77;
  std::string reference;
  for (const unsigned threads : {1u, 2u, 3u, 8u}) {
    spec.threads = threads;
    std::ostringstream os;
    sweep_epsilon(e.policy, *e.model, spec).write_csv(os);
    if (reference.empty()) {
      reference = os.str();
    }
    CHECK(os.str() == reference);
  }
}

TEST_CASE("closed loop tracks better than open loop and NMSE grows with noise")
{
  const auto & e = car_experiment();
  SweepSpec spec;
  spec.master_seed = 42;
  const auto result = sweep_epsilon(e.policy, *e.model, spec);
  std::vector<double> eps;
  std::vector<double> closed;
  for (const auto & row : result.rows) {
    if (row.epsilon >= 0.02 - 1e-12) {
      CHECK(row.avg_nmse_closed <= row.avg_nmse_open);
    }
    eps.push_back(row.epsilon);
    closed.push_back(row.avg_nmse_closed);
  }
  CHECK(result.rows.front().avg_nmse_closed < result.rows.back().avg_nmse_closed);
  CHECK(spearman(eps, closed) >= 0.95);
}

TEST_CASE("replanning triggers on large deviations")
{
  const auto & e = car_experiment();
  RolloutOptions options;
  ReplanOptions replan;
  replan.threshold = 0.05;
  replan.cost = e.cost;
  replan.weights = e.weights;
  options.replan = replan;
  const Rollout r = rollout(e.policy, *e.model, 0.15, ExecutionMode::kClosedLoop, 11, options);
  CHECK(r.replans >= 1);
  CHECK(r.replans <= replan.max_replans);
  CHECK(r.states.size() == e.policy.nominal.states.size());

  const Rollout open = rollout(e.policy, *e.model, 0.15, ExecutionMode::kOpenLoop, 11, options);
  CHECK(open.replans == 0);
}

TEST_CASE("trajectory CSV layout")
{
  const auto & e = car_experiment();
  std::ostringstream os;
  write_trajectory_csv(os, *e.model, e.policy.nominal.states, e.policy.nominal.controls);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,x,y,theta,v,phi\n0,-1.5,0.5,0,", 0) == 0);
  CHECK(count_lines(csv) == 22);
  CHECK(csv.find("\n20,") != std::string::npos);
  CHECK(csv.substr(csv.size() - 9) == ",nan,nan\n");
  CHECK_THROWS_AS(write_trajectory_csv(os, *e.model, e.policy.nominal.states, VecSeq{}), InvalidArgument);
}
