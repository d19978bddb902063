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

#ifndef TLQR__SEPARATION_HPP_
#define TLQR__SEPARATION_HPP_

#include "tlqr/dynamics.hpp"
#include "tlqr/lqr.hpp"
#include "tlqr/planner.hpp"
#include "tlqr/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tlqr
{

// First-order analysis of a tracking policy around its nominal trajectory.
//
// Under the feedback law u~_t = -L_t x~_t the linearized error obeys
// x~_{t+1} = D_t x~_t + w_t with D_t = A_t - B_t L_t and x~_0 = 0, so every
// deviation, and the first-order cost error built from them, is a linear
// combination of the noise samples w_0 .. w_{K-1} with no constant term.

/// D_t = A_t - B_t L_t for t >= 1; D_0 = A_0 (never used because x~_0 = 0).
MatSeq closed_loop_matrices(const LtvSystem & sys, const MatSeq & gains);

/// Ordered products of closed-loop matrices, precomputed for the whole horizon.
class TransitionProducts
{
public:
  explicit TransitionProducts(MatSeq closed_loop);

  int horizon() const { return static_cast<int>(d_.size()); }
  int state_dim() const { return static_cast<int>(identity_.rows()); }
  const MatSeq & closed_loop() const { return d_; }

  /// D_{t2} D_{t2-1} ... D_{t1}; identity when t2 < t1. Requires 0 <= t1, t2 < K.
  const Mat & product(int t1, int t2) const;

  /// Map from the noise at step s to the state error at step t+1: product(s+1, t).
  const Mat & noise_map(int s, int t) const;

private:
  MatSeq d_;
  Mat identity_;
  std::vector<MatSeq> table_;  // table_[t1][t2 - t1] for t2 >= t1
};

/// x~_{t+1} = sum_{s=0}^{t} noise_map(s, t) w_s, where t = noises.size() - 1.
Vec state_error_nonrecursive(const TransitionProducts & products, std::span<const Vec> noises);

/// u~_{t+1} = -L_{t+1} x~_{t+1}, where t = noises.size() - 1 and t + 1 <= K - 1.
Vec control_error_nonrecursive(const TransitionProducts & products, const MatSeq & gains,
                               std::span<const Vec> noises);

/// State errors x~_0..x~_K and control errors u~_0..u~_{K-1}.
struct Deviations
{
  VecSeq state;
  VecSeq control;
};

/// All first-order deviations for one noise sequence of length K.
Deviations first_order_deviations(const TransitionProducts & products, const MatSeq & gains,
                                  std::span<const Vec> noises);

struct CostLinearization
{
  std::vector<RowVec> cx;  // C^x_0 .. C^x_{K-1}
  std::vector<RowVec> cu;  // C^u_0 .. C^u_{K-1}
  RowVec cx_terminal;
  double nominal_cost = 0.0;

  int horizon() const { return static_cast<int>(cu.size()); }
};

CostLinearization linearize_cost(const CostSpec & cost, const NominalTrajectory & nominal);

/// J~1 = sum_t (C^x_t x~_t + C^u_t u~_t) + C^x_K x~_K.
double first_order_cost_error(const CostLinearization & lin, const Deviations & deviations);

/// J~1 written as sum_{t=1}^{K} sum_{s<t} w_{s,t}' w_s.
class CostErrorCoefficients
{
public:
  CostErrorCoefficients(int horizon, int noise_dim, std::vector<VecSeq> table);

  int horizon() const { return horizon_; }
  int noise_dim() const { return noise_dim_; }

  /// w_{s,t} for 0 <= s < t <= K.
  const Vec & at(int s, int t) const;

  /// a_s = sum_{t>s} w_{s,t}, so that J~1 = sum_s a_s' w_s.
  VecSeq aggregated() const;

  double evaluate(std::span<const Vec> noises) const;

  /// E[J~1] = sum a_s' E[w_s]; identically zero for zero-mean noise.
  double expected_value(std::span<const Vec> noise_means) const;

  /// Var[J~1] for i.i.d. isotropic noise with per-component standard deviation sigma.
  double variance(double sigma) const;

private:
  int horizon_;
  int noise_dim_;
  std::vector<VecSeq> table_;  // table_[t][s]
};

CostErrorCoefficients cost_error_coefficients(const CostLinearization & lin, const TransitionProducts & products,
                                              const MatSeq & gains);

/// Numerical evidence that J~1 is homogeneous of degree one in the noise.
struct LinearityCertificate
{
  double constant_term = 0.0;             // J~1 at zero noise
  double max_reconstruction_error = 0.0;  // |coefficients - direct| / max(1, |direct|)
  double max_additivity_error = 0.0;      // |J(a w + b v) - a J(w) - b J(v)| / scale
  int trials = 0;
};

LinearityCertificate certify_linear_in_noise(const CostLinearization & lin, const TransitionProducts & products,
                                             const MatSeq & gains, int trials, std::uint64_t seed);

struct Theorem3Stats
{
  int n = 0;
  double epsilon = 0.0;
  double sigma = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double z = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double predicted_variance = 0.0;
};

/// Samples J~1 under Gaussian noise of standard deviation epsilon * max_t |u^o_t|.
/// Sample i draws from its own stream derived from (seed, i).
Theorem3Stats verify_theorem3(const TrackingPolicy & policy, const CostSpec & cost, double epsilon, int n_samples,
                              std::uint64_t seed, unsigned threads = 1);

/// max_t |(x_t - x^o_t) - x~_t| between a nonlinear closed-loop rollout driven by
/// `noises` and the first-order prediction for the same noises.
double linearization_gap(const SystemModel & model, const TrackingPolicy & policy, std::span<const Vec> noises);

}  // namespace tlqr

#endif  // TLQR__SEPARATION_HPP_
