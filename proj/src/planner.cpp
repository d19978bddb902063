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

#include "tlqr/planner.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace tlqr
{

// ---------------------------------------------------------------------------
// CostSpec

CostSpec CostSpec::for_model(const SystemModel & model, const Vec & goal)
{
  CostSpec spec;
  spec.goal = goal;
  spec.goal_weights = Vec::Ones(model.state_dim());
  if (dynamic_cast<const CarModel *>(&model) != nullptr) {
    spec.goal_weights[2] = 0.5;
  }
  spec.bounds = model.control_bounds();
  return spec;
}

void CostSpec::validate(int state_dim, int control_dim) const
{
  if (!(r_u >= 0.0) || !(r_g >= 0.0) || !(r_b >= 0.0)) {
    throw InvalidArgument("cost: weights r_u, r_g, r_b must be >= 0");
  }
  if (goal.size() > 0) {
    if (goal.size() != state_dim || goal_weights.size() != state_dim) {
      throw InvalidArgument("cost: goal and goal_weights must have length state_dim");
    }
    if (!(r_g > 0.0)) {
      throw InvalidArgument("cost: r_g must be > 0 when a goal is declared");
    }
    if ((goal_weights.array() < 0.0).any()) {
      throw InvalidArgument("cost: goal_weights must be >= 0");
    }
  }
  if (bounds.limit.size() != control_dim || static_cast<int>(bounds.open.size()) != control_dim) {
    throw InvalidArgument("cost: bounds must have length control_dim");
  }
}

double CostSpec::stage(int, const Vec &, const Vec & u) const
{
  double c = r_u * u.squaredNorm();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double excess = std::abs(u[i]) - bounds.limit[i];
    if (excess > 0.0) {
      c += r_b * excess * excess;
    }
  }
  return c;
}

RowVec CostSpec::stage_grad_x(int, const Vec & x, const Vec &) const
{
  return RowVec::Zero(x.size());
}

RowVec CostSpec::stage_grad_u(int, const Vec &, const Vec & u) const
{
  RowVec g = 2.0 * r_u * u.transpose();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double excess = std::abs(u[i]) - bounds.limit[i];
    if (excess > 0.0) {
      g[i] += 2.0 * r_b * excess * (u[i] > 0.0 ? 1.0 : -1.0);
    }
  }
  return g;
}

double CostSpec::terminal(const Vec & x) const
{
  if (goal.size() == 0) {
    return 0.0;
  }
  const Vec e = x - goal;
  return r_g * e.dot(goal_weights.cwiseProduct(e));
}

RowVec CostSpec::terminal_grad(const Vec & x) const
{
  if (goal.size() == 0) {
    return RowVec::Zero(x.size());
  }
  return 2.0 * r_g * goal_weights.cwiseProduct(x - goal).transpose();
}

CostSpec CostSpec::scaled(double lambda) const
{
  CostSpec out = *this;
  out.r_u *= lambda;
  out.r_g *= lambda;
  out.r_b *= lambda;
  return out;
}

// ---------------------------------------------------------------------------
// Cost and adjoint gradient

VecSeq rollout_states(const SystemModel & model, const Vec & x0, const VecSeq & controls)
{
  if (controls.empty()) {
    throw InvalidArgument("planner: control sequence must be nonempty");
  }
  VecSeq states;
  states.reserve(controls.size() + 1);
  states.push_back(x0);
  for (const auto & u : controls) {
    check_dims(model, states.back(), u);
    states.push_back(model.transition(states.back(), u));
  }
  return states;
}

namespace
{

double cost_of(const CostSpec & cost, const VecSeq & states, const VecSeq & controls)
{
  double j = 0.0;
  for (std::size_t t = 0; t < controls.size(); ++t) {
    j += cost.stage(static_cast<int>(t), states[t], controls[t]);
  }
  return j + cost.terminal(states.back());
}

VecSeq adjoint_gradient(
  const SystemModel & model, const CostSpec & cost, const VecSeq & states, const VecSeq & controls)
{
  const int k = static_cast<int>(controls.size());
  VecSeq grad(k);
  Vec lambda = cost.terminal_grad(states[k]).transpose();
  for (int t = k - 1; t >= 0; --t) {
    const Mat a = model.transition_jacobian_state(states[t], controls[t]);
    const Mat b = model.transition_jacobian_control(states[t], controls[t]);
    grad[t] = cost.stage_grad_u(t, states[t], controls[t]).transpose() + b.transpose() * lambda;
    lambda = cost.stage_grad_x(t, states[t], controls[t]).transpose() + a.transpose() * lambda;
  }
  return grad;
}

Vec flatten(const VecSeq & seq)
{
  const Eigen::Index m = seq.front().size();
  Vec z(static_cast<Eigen::Index>(seq.size()) * m);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    z.segment(static_cast<Eigen::Index>(t) * m, m) = seq[t];
  }
  return z;
}

VecSeq unflatten(const Vec & z, int m)
{
  VecSeq seq(z.size() / m);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    seq[t] = z.segment(static_cast<Eigen::Index>(t) * m, m);
  }
  return seq;
}

std::string dump_iterate(const VecSeq & controls)
{
  std::ostringstream os;
  os.precision(17);
  for (std::size_t t = 0; t < controls.size(); ++t) {
    os << "\n  u[" << t << "] = " << controls[t].transpose();
  }
  return os.str();
}

}  // namespace

double nominal_cost(const SystemModel & model, const CostSpec & cost, const Vec & x0, const VecSeq & controls)
{
  return cost_of(cost, rollout_states(model, x0, controls), controls);
}

VecSeq cost_gradient(const SystemModel & model, const CostSpec & cost, const Vec & x0, const VecSeq & controls)
{
  return adjoint_gradient(model, cost, rollout_states(model, x0, controls), controls);
}

// ---------------------------------------------------------------------------
// Optimizer

std::pair<NominalTrajectory, PlannerReport> optimize_nominal(
  const SystemModel & model, const CostSpec & cost, const Vec & x0, int horizon, const PlannerOptions & options)
{
  return optimize_nominal(model, cost, x0, horizon, VecSeq(std::max(horizon, 0), Vec::Zero(model.control_dim())),
                          options);
}

std::pair<NominalTrajectory, PlannerReport> optimize_nominal(
  const SystemModel & model, const CostSpec & cost, const Vec & x0, int horizon, const VecSeq & init_controls,
  const PlannerOptions & options)
{
  if (horizon < 1) {
    throw InvalidArgument("optimize_nominal: horizon must be >= 1");
  }
  if (static_cast<int>(init_controls.size()) != horizon) {
    throw InvalidArgument("optimize_nominal: init_controls must have length horizon");
  }
  if (x0.size() != model.state_dim()) {
    throw InvalidArgument("optimize_nominal: x0 has wrong dimension");
  }
  cost.validate(model.state_dim(), model.control_dim());
  const int m = model.control_dim();

  auto evaluate = [&](const Vec & z) {
    const VecSeq u = unflatten(z, m);
    return cost_of(cost, rollout_states(model, x0, u), u);
  };
  auto gradient = [&](const Vec & z) {
    const VecSeq u = unflatten(z, m);
    return flatten(adjoint_gradient(model, cost, rollout_states(model, x0, u), u));
  };

  PlannerReport report;
  Vec z = flatten(init_controls);
  double f = evaluate(z);
  Vec g = gradient(z);
  if (!std::isfinite(f) || !g.allFinite()) {
    throw NumericalFailure("optimize_nominal: non-finite cost or gradient at the initial iterate" +
                           dump_iterate(unflatten(z, m)));
  }
  report.cost_history.push_back(f);

  std::deque<std::pair<Vec, Vec>> pairs;  // (s, y), newest at the back
  report.stop_reason = "max_iters";
  if (g.norm() <= options.tolerance) {
    report.stop_reason = "at_start";
    report.converged = true;
  }

  while (!report.converged && report.iterations < options.max_iters) {
    // Two-loop recursion for d = -H g.
    Vec q = g;
    std::vector<double> alphas(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
      const auto & [s, y] = pairs[i];
      alphas[i] = s.dot(q) / y.dot(s);
      q -= alphas[i] * y;
    }
    if (!pairs.empty()) {
      const auto & [s, y] = pairs.back();
      q *= s.dot(y) / y.dot(y);
    } else {
      q *= std::min(1.0, 1.0 / g.norm());
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto & [s, y] = pairs[i];
      const double beta = y.dot(q) / y.dot(s);
      q += (alphas[i] - beta) * s;
    }
    Vec d = -q;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      pairs.clear();
      d = -g * std::min(1.0, 1.0 / g.norm());
      slope = g.dot(d);
    }

    double step = 1.0;
    double f_new = f;
    Vec z_new;
    bool accepted = false;
    while (step >= options.step_floor) {
      z_new = z + step * d;
      f_new = evaluate(z_new);
      if (std::isfinite(f_new) && f_new <= f + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!pairs.empty()) {
        pairs.clear();  // retry along steepest descent
        continue;
      }
      report.stop_reason = "step_collapse";
      report.converged = true;
      break;
    }

    const Vec g_new = gradient(z_new);
    if (!g_new.allFinite()) {
      throw NumericalFailure("optimize_nominal: non-finite gradient" + dump_iterate(unflatten(z_new, m)));
    }
    Vec s = z_new - z;
    Vec y = g_new - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      pairs.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(pairs.size()) > options.memory) {
        pairs.pop_front();
      }
    }
    z = z_new;
    f = f_new;
    g = g_new;
    ++report.iterations;
    report.cost_history.push_back(f);
    if (g.norm() <= options.tolerance) {
      report.stop_reason = "gradient";
      report.converged = true;
    }
  }

  VecSeq controls = unflatten(z, m);
  const ControlBounds & bounds = model.control_bounds();
  for (const auto & u : controls) {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      report.max_bound_excess = std::max(report.max_bound_excess, std::abs(u[i]) - bounds.limit[i]);
    }
  }
  // Penalty slack can leave controls marginally outside the admissible set.
  for (auto & u : controls) {
    if (!bounds.contains(u)) {
      u = bounds.clamp(u);
      report.projected = true;
    }
  }

  NominalTrajectory traj;
  traj.states = rollout_states(model, x0, controls);
  traj.controls = std::move(controls);
  traj.nominal_cost = cost_of(cost, traj.states, traj.controls);

  report.final_cost = traj.nominal_cost;
  report.gradient_norm = g.norm();
  if (cost.goal.size() > 0) {
    const Vec e = traj.states.back() - cost.goal;
    report.terminal_position_error = e.head(std::min<Eigen::Index>(2, e.size())).norm();
    if (e.size() >= 3) {
      report.terminal_heading_error = std::abs(std::remainder(e[2], 2.0 * M_PI));
    }
  }
  return {std::move(traj), std::move(report)};
}

}  // namespace tlqr
