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

#ifndef TLQR__DYNAMICS_HPP_
#define TLQR__DYNAMICS_HPP_

#include "tlqr/random.hpp"
#include "tlqr/types.hpp"

#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace tlqr
{

/// Strict bounds (|u_i| < limit_i) are clamped this far inside the limit.
inline constexpr double kOpenBoundMargin = 1e-6;

/// Symmetric box on the control: |u_i| <= limit_i, or |u_i| < limit_i when open_i.
struct ControlBounds
{
  Vec limit;
  std::vector<bool> open;

  static ControlBounds unbounded(int control_dim);

  bool contains(const Vec & u) const;
  Vec clamp(const Vec & u) const;
};

/**
 * Discrete-time noise-free transition map x_{t+1} = f(x_t, u_t) with Jacobians.
 *
 * The virtual interface is unchecked: the planner evaluates it at trial points outside
 * the control bounds (bounds enter the planning cost as penalties). Use the free
 * functions step(), jacobian_state() and jacobian_control() for validated access.
 */
class SystemModel
{
public:
  virtual ~SystemModel() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual double step_period() const = 0;
  virtual const ControlBounds & control_bounds() const = 0;
  virtual std::vector<std::string> state_names() const;
  virtual std::vector<std::string> control_names() const;

  virtual Vec transition(const Vec & x, const Vec & u) const = 0;
  virtual Mat transition_jacobian_state(const Vec & x, const Vec & u) const = 0;
  virtual Mat transition_jacobian_control(const Vec & x, const Vec & u) const = 0;

  /// Throws DomainError if the map is not differentiable at (x, u).
  virtual void check_smooth(const Vec & x, const Vec & u) const;
};

enum class Integrator { kEuler, kRk4 };

struct CarParams
{
  double wheelbase = 0.5;
  double step_period = 0.7;
  double v_max = 0.6;
  double phi_max = 1.5707963267948966;
  Integrator integrator = Integrator::kEuler;
};

/// Kinematic car: state (x, y, theta), control (v, phi).
///   x' = v cos(theta), y' = v sin(theta), theta' = v tan(phi) / wheelbase
class CarModel final : public SystemModel
{
public:
  explicit CarModel(const CarParams & params = {});

  std::string name() const override { return "car"; }
  int state_dim() const override { return 3; }
  int control_dim() const override { return 2; }
  double step_period() const override { return params_.step_period; }
  const ControlBounds & control_bounds() const override { return bounds_; }
  std::vector<std::string> state_names() const override { return {"x", "y", "theta"}; }
  std::vector<std::string> control_names() const override { return {"v", "phi"}; }

  Vec transition(const Vec & x, const Vec & u) const override;
  Mat transition_jacobian_state(const Vec & x, const Vec & u) const override;
  Mat transition_jacobian_control(const Vec & x, const Vec & u) const override;
  void check_smooth(const Vec & x, const Vec & u) const override;

  const CarParams & params() const { return params_; }

  // Continuous-time vector field and its partial derivatives.
  Vec rate(const Vec & x, const Vec & u) const;
  Mat rate_jacobian_state(const Vec & x, const Vec & u) const;
  Mat rate_jacobian_control(const Vec & x, const Vec & u) const;

private:
  void rk4(const Vec & x, const Vec & u, Vec * next, Mat * jx, Mat * ju) const;

  CarParams params_;
  ControlBounds bounds_;
};

/// x_{t+1} = A x_t + B u_t, unbounded controls.
class LinearModel final : public SystemModel
{
public:
  LinearModel(Mat a, Mat b, double step_period = 1.0);

  std::string name() const override { return "linear"; }
  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int control_dim() const override { return static_cast<int>(b_.cols()); }
  double step_period() const override { return step_period_; }
  const ControlBounds & control_bounds() const override { return bounds_; }

  Vec transition(const Vec & x, const Vec & u) const override { return a_ * x + b_ * u; }
  Mat transition_jacobian_state(const Vec &, const Vec &) const override { return a_; }
  Mat transition_jacobian_control(const Vec &, const Vec &) const override { return b_; }

private:
  Mat a_;
  Mat b_;
  double step_period_;
  ControlBounds bounds_;
};

/// Noise-free state sequence of length K+1 with its K controls.
struct NominalTrajectory
{
  VecSeq states;
  VecSeq controls;
  /// Penalized planning cost of this trajectory; NaN until a cost has been evaluated.
  double nominal_cost = std::numeric_limits<double>::quiet_NaN();

  int horizon() const { return static_cast<int>(controls.size()); }
};

/// Isotropic additive Gaussian noise with standard deviation epsilon * base_sigma.
struct NoiseModel
{
  double epsilon = 0.0;
  double base_sigma = 0.0;
  int dim = 1;

  NoiseModel(double epsilon, double base_sigma, int dim);

  double sigma() const { return epsilon * base_sigma; }
  Mat covariance() const;
  Vec sample(Rng & rng) const;
};

/// max_t |u_t|_2, the reference scale for the noise standard deviation.
double noise_scale(const VecSeq & controls);

void check_dims(const SystemModel & model, const Vec & x, const Vec & u);

/// Validated noise-free step: dimensions and control bounds are enforced.
Vec step(const SystemModel & model, const Vec & x, const Vec & u);
Vec step_noisy(const SystemModel & model, const Vec & x, const Vec & u, const Vec & w);

Mat jacobian_state(const SystemModel & model, const Vec & x, const Vec & u);
Mat jacobian_control(const SystemModel & model, const Vec & x, const Vec & u);

NominalTrajectory rollout_nominal(const SystemModel & model, const Vec & x0, const VecSeq & controls);

}  // namespace tlqr

#endif  // TLQR__DYNAMICS_HPP_
