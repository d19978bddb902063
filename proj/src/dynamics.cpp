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

#include "tlqr/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tlqr
{

ControlBounds ControlBounds::unbounded(int control_dim)
{
  ControlBounds b;
  b.limit = Vec::Constant(control_dim, std::numeric_limits<double>::infinity());
  b.open.assign(control_dim, false);
  return b;
}

bool ControlBounds::contains(const Vec & u) const
{
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]);
    if (open[i] ? !(a < limit[i]) : !(a <= limit[i])) {
      return false;
    }
  }
  return true;
}

Vec ControlBounds::clamp(const Vec & u) const
{
  Vec out = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double hi = open[i] ? limit[i] - kOpenBoundMargin : limit[i];
    out[i] = std::clamp(u[i], -hi, hi);
  }
  return out;
}

std::vector<std::string> SystemModel::state_names() const
{
  std::vector<std::string> names;
  for (int i = 0; i < state_dim(); ++i) {
    names.push_back("x" + std::to_string(i));
  }
  return names;
}

std::vector<std::string> SystemModel::control_names() const
{
  std::vector<std::string> names;
  for (int i = 0; i < control_dim(); ++i) {
    names.push_back("u" + std::to_string(i));
  }
  return names;
}

void SystemModel::check_smooth(const Vec &, const Vec &) const {}

// ---------------------------------------------------------------------------
// Car

CarModel::CarModel(const CarParams & params) : params_(params)
{
  if (!(params_.wheelbase > 0.0)) {
    throw InvalidArgument("car model: wheelbase must be > 0");
  }
  // A zero period is accepted as a degenerate configuration (identity map).
  if (!(params_.step_period >= 0.0)) {
    throw InvalidArgument("car model: step_period must be >= 0");
  }
  if (!(params_.v_max > 0.0) || !(params_.phi_max > 0.0) || params_.phi_max > M_PI / 2) {
    throw InvalidArgument("car model: need v_max > 0 and 0 < phi_max <= pi/2");
  }
  bounds_.limit = Vec(2);
  bounds_.limit << params_.v_max, params_.phi_max;
  bounds_.open = {false, true};
}

Vec CarModel::rate(const Vec & x, const Vec & u) const
{
  Vec r(3);
  r << u[0] * std::cos(x[2]), u[0] * std::sin(x[2]), u[0] / params_.wheelbase * std::tan(u[1]);
  return r;
}

Mat CarModel::rate_jacobian_state(const Vec & x, const Vec & u) const
{
  Mat j = Mat::Zero(3, 3);
  j(0, 2) = -u[0] * std::sin(x[2]);
  j(1, 2) = u[0] * std::cos(x[2]);
  return j;
}

Mat CarModel::rate_jacobian_control(const Vec & x, const Vec & u) const
{
  const double c = std::cos(u[1]);
  Mat j = Mat::Zero(3, 2);
  j(0, 0) = std::cos(x[2]);
  j(1, 0) = std::sin(x[2]);
  j(2, 0) = std::tan(u[1]) / params_.wheelbase;
  j(2, 1) = u[0] / (params_.wheelbase * c * c);
  return j;
}

void CarModel::rk4(const Vec & x, const Vec & u, Vec * next, Mat * jx, Mat * ju) const
{
  const double h = params_.step_period;
  const Mat eye = Mat::Identity(3, 3);

  const Vec k1 = rate(x, u);
  const Vec x2 = x + 0.5 * h * k1;
  const Vec k2 = rate(x2, u);
  const Vec x3 = x + 0.5 * h * k2;
  const Vec k3 = rate(x3, u);
  const Vec x4 = x + h * k3;
  const Vec k4 = rate(x4, u);
  if (next) {
    *next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!jx && !ju) {
    return;
  }

  // Chain rule through the four stages.
  const Mat j1x = rate_jacobian_state(x, u);
  const Mat j1u = rate_jacobian_control(x, u);
  const Mat a2 = rate_jacobian_state(x2, u);
  const Mat j2x = a2 * (eye + 0.5 * h * j1x);
  const Mat j2u = a2 * (0.5 * h * j1u) + rate_jacobian_control(x2, u);
  const Mat a3 = rate_jacobian_state(x3, u);
  const Mat j3x = a3 * (eye + 0.5 * h * j2x);
  const Mat j3u = a3 * (0.5 * h * j2u) + rate_jacobian_control(x3, u);
  const Mat a4 = rate_jacobian_state(x4, u);
  const Mat j4x = a4 * (eye + h * j3x);
  const Mat j4u = a4 * (h * j3u) + rate_jacobian_control(x4, u);
  if (jx) {
    *jx = eye + h / 6.0 * (j1x + 2.0 * j2x + 2.0 * j3x + j4x);
  }
  if (ju) {
    *ju = h / 6.0 * (j1u + 2.0 * j2u + 2.0 * j3u + j4u);
  }
}

Vec CarModel::transition(const Vec & x, const Vec & u) const
{
  if (params_.integrator == Integrator::kRk4) {
    Vec next;
    rk4(x, u, &next, nullptr, nullptr);
    return next;
  }
  return x + params_.step_period * rate(x, u);
}

Mat CarModel::transition_jacobian_state(const Vec & x, const Vec & u) const
{
  if (params_.integrator == Integrator::kRk4) {
    Mat jx;
    rk4(x, u, nullptr, &jx, nullptr);
    return jx;
  }
  return Mat::Identity(3, 3) + params_.step_period * rate_jacobian_state(x, u);
}

Mat CarModel::transition_jacobian_control(const Vec & x, const Vec & u) const
{
  if (params_.integrator == Integrator::kRk4) {
    Mat ju;
    rk4(x, u, nullptr, nullptr, &ju);
    return ju;
  }
  return params_.step_period * rate_jacobian_control(x, u);
}

void CarModel::check_smooth(const Vec &, const Vec & u) const
{
  if (!(std::abs(u[1]) < params_.phi_max)) {
    std::ostringstream os;
    os << "car model: steering angle phi=" << u[1] << " is at or beyond phi_max=" << params_.phi_max;
    throw DomainError(os.str());
  }
}

// ---------------------------------------------------------------------------
// Linear

LinearModel::LinearModel(Mat a, Mat b, double step_period)
: a_(std::move(a)), b_(std::move(b)), step_period_(step_period)
{
  if (a_.rows() < 1 || a_.rows() != a_.cols() || b_.rows() != a_.rows() || b_.cols() < 1) {
    throw InvalidArgument("linear model: A must be n x n and B n x m with n, m >= 1");
  }
  if (!(step_period_ > 0.0)) {
    throw InvalidArgument("linear model: step_period must be > 0");
  }
  bounds_ = ControlBounds::unbounded(static_cast<int>(b_.cols()));
}

// ---------------------------------------------------------------------------
// Noise

NoiseModel::NoiseModel(double eps, double base, int n) : epsilon(eps), base_sigma(base), dim(n)
{
  if (!(epsilon >= 0.0) || !(base_sigma >= 0.0) || dim < 1) {
    throw InvalidArgument("noise model: epsilon and base_sigma must be >= 0, dim >= 1");
  }
}

Mat NoiseModel::covariance() const
{
  return sigma() * sigma() * Mat::Identity(dim, dim);
}

Vec NoiseModel::sample(Rng & rng) const
{
  if (sigma() == 0.0) {
    return Vec::Zero(dim);
  }
  return sigma() * standard_normal(rng, dim);
}

double noise_scale(const VecSeq & controls)
{
  if (controls.empty()) {
    throw InvalidArgument("noise_scale: control sequence must be nonempty");
  }
  double scale = 0.0;
  for (const auto & u : controls) {
    scale = std::max(scale, u.norm());
  }
  return scale;
}

// ---------------------------------------------------------------------------
// Validated access

void check_dims(const SystemModel & model, const Vec & x, const Vec & u)
{
  if (x.size() != model.state_dim() || u.size() != model.control_dim()) {
    std::ostringstream os;
    os << model.name() << ": expected state of length " << model.state_dim() << " and control of length "
       << model.control_dim() << ", got " << x.size() << " and " << u.size();
    throw InvalidArgument(os.str());
  }
}

Vec step(const SystemModel & model, const Vec & x, const Vec & u)
{
  check_dims(model, x, u);
  const ControlBounds & bounds = model.control_bounds();
  if (!bounds.contains(u)) {
    const auto names = model.control_names();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double a = std::abs(u[i]);
      const bool ok = bounds.open[i] ? a < bounds.limit[i] : a <= bounds.limit[i];
      if (!ok) {
        std::ostringstream os;
        os << model.name() << ": control component '" << names[i] << "' = " << u[i]
           << " violates bound " << (bounds.open[i] ? "|.| < " : "|.| <= ") << bounds.limit[i];
        throw BoundViolation(names[i], os.str());
      }
    }
  }
  return model.transition(x, u);
}

Vec step_noisy(const SystemModel & model, const Vec & x, const Vec & u, const Vec & w)
{
  if (w.size() != model.state_dim()) {
    throw InvalidArgument(model.name() + ": noise vector length must equal state_dim");
  }
  return step(model, x, u) + w;
}

Mat jacobian_state(const SystemModel & model, const Vec & x, const Vec & u)
{
  check_dims(model, x, u);
  model.check_smooth(x, u);
  return model.transition_jacobian_state(x, u);
}

Mat jacobian_control(const SystemModel & model, const Vec & x, const Vec & u)
{
  check_dims(model, x, u);
  model.check_smooth(x, u);
  return model.transition_jacobian_control(x, u);
}

NominalTrajectory rollout_nominal(const SystemModel & model, const Vec & x0, const VecSeq & controls)
{
  if (controls.empty()) {
    throw InvalidArgument("rollout_nominal: control sequence must be nonempty");
  }
  if (x0.size() != model.state_dim()) {
    throw InvalidArgument("rollout_nominal: x0 has wrong dimension");
  }
  NominalTrajectory traj;
  traj.controls = controls;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(x0);
  for (const auto & u : controls) {
    traj.states.push_back(step(model, traj.states.back(), u));
  }
  return traj;
}

}  // namespace tlqr
