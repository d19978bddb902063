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

#ifndef TLQR__LQR_HPP_
#define TLQR__LQR_HPP_

#include "tlqr/dynamics.hpp"
#include "tlqr/types.hpp"

#include <ostream>

namespace tlqr
{

/// Linear time-varying error dynamics x~_{t+1} = A_t x~_t + B_t u~_t.
struct LtvSystem
{
  MatSeq a;
  MatSeq b;

  int horizon() const { return static_cast<int>(a.size()); }
  int state_dim() const { return a.empty() ? 0 : static_cast<int>(a.front().rows()); }
  int control_dim() const { return b.empty() ? 0 : static_cast<int>(b.front().cols()); }
  void validate() const;
};

/// Tracking weights. wx holds K+1 entries, the last being the terminal weight; wu holds K.
struct LqrWeights
{
  MatSeq wx;
  MatSeq wu;

  static LqrWeights constant(int horizon, const Mat & wx, const Mat & wu, const Mat & wx_terminal);
  static LqrWeights identity(int horizon, int state_dim, int control_dim);

  /// Weights for the tail [offset, K] of the horizon.
  LqrWeights tail(int offset) const;

  void validate(const LtvSystem & sys) const;
};

struct RiccatiSolution
{
  MatSeq gains;    // L_0 .. L_{K-1}
  MatSeq riccati;  // P_0 .. P_K
};

/// Nominal trajectory plus the time-varying feedback law that tracks it.
struct TrackingPolicy
{
  NominalTrajectory nominal;
  LtvSystem system;
  MatSeq gains;
  MatSeq riccati;
  MatSeq closed_loop;  // D_t = A_t - B_t L_t
  ControlBounds bounds;

  int horizon() const { return nominal.horizon(); }
};

LtvSystem linearize_along(const SystemModel & model, const NominalTrajectory & nominal);

/// Backward Riccati recursion:
///   L_t = (Wu_t + B_t' P_{t+1} B_t)^{-1} B_t' P_{t+1} A_t
///   P_t = A_t' P_{t+1} A_t - A_t' P_{t+1} B_t L_t + Wx_t,   P_K = Wx_K
/// Each P_t is symmetrized after its update.
RiccatiSolution riccati_backward(const LtvSystem & sys, const LqrWeights & weights);

TrackingPolicy make_policy(NominalTrajectory nominal, LtvSystem sys, RiccatiSolution solution, ControlBounds bounds);

/// Linearize, solve the Riccati recursion and assemble the policy in one call.
TrackingPolicy synthesize_policy(const SystemModel & model, const NominalTrajectory & nominal,
                                 const LqrWeights & weights);

/// u = u^o_t - L_t (x - x^o_t), clamped to the policy bounds.
Vec feedback_control(const TrackingPolicy & policy, int t, const Vec & x);

/// One row per t: t, L_t flattened row-major, then P_t flattened row-major (the
/// L columns are "nan" on the terminal row).
void write_gains_csv(std::ostream & os, const TrackingPolicy & policy);

}  // namespace tlqr

#endif  // TLQR__LQR_HPP_
