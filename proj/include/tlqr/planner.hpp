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

#ifndef TLQR__PLANNER_HPP_
#define TLQR__PLANNER_HPP_

#include "tlqr/dynamics.hpp"
#include "tlqr/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace tlqr
{

/**
 * Penalized planning cost.
 *
 *   stage:    c_t(x, u) = r_u |u|^2 + r_b sum_i max(0, |u_i| - limit_i)^2
 *   terminal: c_K(x)    = r_g (x - x_g)^T diag(goal_weights) (x - x_g)
 *
 * Both are continuously differentiable. An empty goal disables the terminal term.
 */
struct CostSpec
{
  double r_u = 0.1;
  double r_g = 100.0;
  double r_b = 100.0;
  Vec goal;
  Vec goal_weights;
  ControlBounds bounds;

  /// Defaults for a model: bounds from the model, unit goal weights except a 0.5
  /// weight on the car heading.
  static CostSpec for_model(const SystemModel & model, const Vec & goal);

  void validate(int state_dim, int control_dim) const;

  double stage(int t, const Vec & x, const Vec & u) const;
  RowVec stage_grad_x(int t, const Vec & x, const Vec & u) const;
  RowVec stage_grad_u(int t, const Vec & x, const Vec & u) const;
  double terminal(const Vec & x) const;
  RowVec terminal_grad(const Vec & x) const;

  CostSpec scaled(double lambda) const;
};

struct PlannerOptions
{
  double tolerance = 1e-6;
  int max_iters = 500;
  double step_floor = 1e-12;
  int memory = 10;
  double armijo = 1e-4;
};

struct PlannerReport
{
  int iterations = 0;
  double final_cost = 0.0;
  double terminal_position_error = 0.0;
  double terminal_heading_error = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  /// "gradient", "step_collapse", "max_iters" or "at_start".
  std::string stop_reason;
  /// True when the final controls were clamped into the model bounds before returning.
  bool projected = false;
  double max_bound_excess = 0.0;
  /// Cost at the start and after every accepted iteration.
  std::vector<double> cost_history;
};

/// Noise-free rollout without control-bound checks; dimensions are still validated.
VecSeq rollout_states(const SystemModel & model, const Vec & x0, const VecSeq & controls);

/// J = sum_t c_t(x_t, u_t) + c_K(x_K) along the noise-free rollout of `controls`.
double nominal_cost(const SystemModel & model, const CostSpec & cost, const Vec & x0, const VecSeq & controls);

/// Gradient of nominal_cost with respect to every u_t (backward adjoint sweep).
VecSeq cost_gradient(const SystemModel & model, const CostSpec & cost, const Vec & x0, const VecSeq & controls);

/// Single-shooting L-BFGS with Armijo backtracking over u_{0:K-1}.
std::pair<NominalTrajectory, PlannerReport> optimize_nominal(
  const SystemModel & model, const CostSpec & cost, const Vec & x0, int horizon, const VecSeq & init_controls,
  const PlannerOptions & options = {});

/// Same, starting from all-zero controls.
std::pair<NominalTrajectory, PlannerReport> optimize_nominal(
  const SystemModel & model, const CostSpec & cost, const Vec & x0, int horizon, const PlannerOptions & options = {});

}  // namespace tlqr

#endif  // TLQR__PLANNER_HPP_
