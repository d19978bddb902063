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

#include "tlqr/lqr.hpp"

#include "tlqr/io.hpp"

#include <sstream>

namespace tlqr
{

void LtvSystem::validate() const
{
  if (a.empty() || a.size() != b.size()) {
    throw InvalidArgument("ltv system: A and B sequences must be nonempty and of equal length");
  }
  const auto n = a.front().rows();
  const auto m = b.front().cols();
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].rows() != n || a[t].cols() != n || b[t].rows() != n || b[t].cols() != m) {
      std::ostringstream os;
      os << "ltv system: inconsistent dimensions at t=" << t;
      throw InvalidArgument(os.str());
    }
  }
}

LqrWeights LqrWeights::constant(int horizon, const Mat & wx, const Mat & wu, const Mat & wx_terminal)
{
  LqrWeights w;
  w.wx.assign(horizon, wx);
  w.wx.push_back(wx_terminal);
  w.wu.assign(horizon, wu);
  return w;
}

LqrWeights LqrWeights::identity(int horizon, int state_dim, int control_dim)
{
  const Mat ix = Mat::Identity(state_dim, state_dim);
  return constant(horizon, ix, Mat::Identity(control_dim, control_dim), ix);
}

LqrWeights LqrWeights::tail(int offset) const
{
  if (offset < 0 || offset >= static_cast<int>(wu.size())) {
    throw InvalidArgument("lqr weights: tail offset out of range");
  }
  LqrWeights w;
  w.wx.assign(wx.begin() + offset, wx.end());
  w.wu.assign(wu.begin() + offset, wu.end());
  return w;
}

void LqrWeights::validate(const LtvSystem & sys) const
{
  const auto k = static_cast<std::size_t>(sys.horizon());
  if (wx.size() != k + 1 || wu.size() != k) {
    throw InvalidArgument("lqr weights: need K+1 state weights and K control weights");
  }
  const int n = sys.state_dim();
  const int m = sys.control_dim();
  for (const auto & w : wx) {
    if (w.rows() != n || w.cols() != n) {
      throw InvalidArgument("lqr weights: state weight has wrong shape");
    }
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidArgument("lqr weights: state weight must be symmetric");
    }
    if (Eigen::SelfAdjointEigenSolver<Mat>(w).eigenvalues().minCoeff() < -1e-12) {
      throw InvalidArgument("lqr weights: state weight must be positive semidefinite");
    }
  }
  for (const auto & w : wu) {
    if (w.rows() != m || w.cols() != m) {
      throw InvalidArgument("lqr weights: control weight has wrong shape");
    }
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidArgument("lqr weights: control weight must be symmetric");
    }
    if (!(Eigen::SelfAdjointEigenSolver<Mat>(w).eigenvalues().minCoeff() > 0.0)) {
      throw InvalidArgument("lqr weights: control weight must be positive definite");
    }
  }
}

LtvSystem linearize_along(const SystemModel & model, const NominalTrajectory & nominal)
{
  const int k = nominal.horizon();
  if (k < 1 || static_cast<int>(nominal.states.size()) != k + 1) {
    throw InvalidArgument("linearize_along: nominal needs K >= 1 controls and K+1 states");
  }
  LtvSystem sys;
  sys.a.reserve(k);
  sys.b.reserve(k);
  for (int t = 0; t < k; ++t) {
    sys.a.push_back(jacobian_state(model, nominal.states[t], nominal.controls[t]));
    sys.b.push_back(jacobian_control(model, nominal.states[t], nominal.controls[t]));
  }
  return sys;
}

RiccatiSolution riccati_backward(const LtvSystem & sys, const LqrWeights & weights)
{
  sys.validate();
  weights.validate(sys);
  const int k = sys.horizon();
  RiccatiSolution out;
  out.gains.resize(k);
  out.riccati.resize(k + 1);
  out.riccati[k] = weights.wx[k];
  for (int t = k - 1; t >= 0; --t) {
    const Mat & a = sys.a[t];
    const Mat & b = sys.b[t];
    const Mat & p = out.riccati[t + 1];
    const Mat pb = p * b;
    const Mat s = weights.wu[t] + b.transpose() * pb;
    const Eigen::LDLT<Mat> ldlt(s);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
      std::ostringstream os;
      os << "riccati_backward: Wu + B'PB is singular at t=" << t;
      throw NumericalFailure(os.str());
    }
    out.gains[t] = ldlt.solve(pb.transpose() * a);
    Mat next = a.transpose() * p * a - a.transpose() * pb * out.gains[t] + weights.wx[t];
    out.riccati[t] = 0.5 * (next + next.transpose());
  }
  return out;
}

TrackingPolicy make_policy(NominalTrajectory nominal, LtvSystem sys, RiccatiSolution solution, ControlBounds bounds)
{
  TrackingPolicy policy;
  policy.closed_loop.reserve(sys.a.size());
  for (std::size_t t = 0; t < sys.a.size(); ++t) {
    policy.closed_loop.push_back(sys.a[t] - sys.b[t] * solution.gains[t]);
  }
  policy.nominal = std::move(nominal);
  policy.system = std::move(sys);
  policy.gains = std::move(solution.gains);
  policy.riccati = std::move(solution.riccati);
  policy.bounds = std::move(bounds);
  return policy;
}

TrackingPolicy synthesize_policy(const SystemModel & model, const NominalTrajectory & nominal,
                                 const LqrWeights & weights)
{
  LtvSystem sys = linearize_along(model, nominal);
  RiccatiSolution solution = riccati_backward(sys, weights);
  return make_policy(nominal, std::move(sys), std::move(solution), model.control_bounds());
}

Vec feedback_control(const TrackingPolicy & policy, int t, const Vec & x)
{
  if (t < 0 || t >= policy.horizon()) {
    std::ostringstream os;
    os << "feedback_control: t=" << t << " outside [0, " << policy.horizon() - 1 << "]";
    throw InvalidArgument(os.str());
  }
  if (x.size() != policy.nominal.states[t].size()) {
    throw InvalidArgument("feedback_control: state has wrong dimension");
  }
  const Vec u = policy.nominal.controls[t] - policy.gains[t] * (x - policy.nominal.states[t]);
  return policy.bounds.clamp(u);
}

void write_gains_csv(std::ostream & os, const TrackingPolicy & policy)
{
  const int k = policy.horizon();
  const auto n = policy.riccati.front().rows();
  const auto m = policy.gains.empty() ? 0 : policy.gains.front().rows();
  os << "t";
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      os << ",L_" << i << "_" << j;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      os << ",P_" << i << "_" << j;
    }
  }
  os << "\n";
  for (int t = 0; t <= k; ++t) {
    os << t;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        os << "," << (t < k ? format_number(policy.gains[t](i, j)) : "nan");
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        os << "," << format_number(policy.riccati[t](i, j));
      }
    }
    os << "\n";
  }
}

}  // namespace tlqr
