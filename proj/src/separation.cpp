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

#include "tlqr/separation.hpp"

#include "tlqr/parallel.hpp"
#include "tlqr/random.hpp"
#include "tlqr/stats.hpp"

#include <cmath>
#include <sstream>

namespace tlqr
{

MatSeq closed_loop_matrices(const LtvSystem & sys, const MatSeq & gains)
{
  sys.validate();
  if (gains.size() != sys.a.size()) {
    throw InvalidArgument("closed_loop_matrices: need one gain per time step");
  }
  MatSeq d;
  d.reserve(sys.a.size());
  for (std::size_t t = 0; t < sys.a.size(); ++t) {
    if (gains[t].rows() != sys.b[t].cols() || gains[t].cols() != sys.a[t].cols()) {
      std::ostringstream os;
      os << "closed_loop_matrices: gain at t=" << t << " has shape " << gains[t].rows() << "x" << gains[t].cols();
      throw InvalidArgument(os.str());
    }
    d.push_back(t == 0 ? sys.a[0] : Mat(sys.a[t] - sys.b[t] * gains[t]));
  }
  return d;
}

// ---------------------------------------------------------------------------
// TransitionProducts

TransitionProducts::TransitionProducts(MatSeq closed_loop) : d_(std::move(closed_loop))
{
  if (d_.empty()) {
    throw InvalidArgument("TransitionProducts: need at least one closed-loop matrix");
  }
  const auto n = d_.front().rows();
  identity_ = Mat::Identity(n, n);
  const int k = horizon();
  table_.resize(k);
  for (int t1 = 0; t1 < k; ++t1) {
    table_[t1].reserve(k - t1);
    table_[t1].push_back(d_[t1]);
    for (int t2 = t1 + 1; t2 < k; ++t2) {
      table_[t1].push_back(d_[t2] * table_[t1].back());
    }
  }
}

const Mat & TransitionProducts::product(int t1, int t2) const
{
  if (t2 < t1) {
    return identity_;
  }
  if (t1 < 0 || t2 >= horizon()) {
    std::ostringstream os;
    os << "TransitionProducts: product(" << t1 << ", " << t2 << ") outside horizon " << horizon();
    throw InvalidArgument(os.str());
  }
  return table_[t1][t2 - t1];
}

const Mat & TransitionProducts::noise_map(int s, int t) const
{
  if (s < 0 || s > t) {
    throw InvalidArgument("TransitionProducts: noise_map needs 0 <= s <= t");
  }
  return product(s + 1, t);
}

// ---------------------------------------------------------------------------
// Error propagation

Vec state_error_nonrecursive(const TransitionProducts & products, std::span<const Vec> noises)
{
  if (noises.empty() || static_cast<int>(noises.size()) > products.horizon()) {
    throw InvalidArgument("state_error_nonrecursive: need 1 <= len(noises) <= K");
  }
  const int t = static_cast<int>(noises.size()) - 1;
  Vec x = Vec::Zero(products.state_dim());
  for (int s = 0; s <= t; ++s) {
    if (noises[s].size() != products.state_dim()) {
      throw InvalidArgument("state_error_nonrecursive: noise vector has wrong length");
    }
    x.noalias() += products.noise_map(s, t) * noises[s];
  }
  return x;
}

Vec control_error_nonrecursive(const TransitionProducts & products, const MatSeq & gains,
                               std::span<const Vec> noises)
{
  if (noises.empty() || static_cast<int>(noises.size()) > products.horizon() - 1) {
    throw InvalidArgument("control_error_nonrecursive: need 1 <= len(noises) <= K-1");
  }
  if (static_cast<int>(gains.size()) != products.horizon()) {
    throw InvalidArgument("control_error_nonrecursive: need one gain per time step");
  }
  const int t = static_cast<int>(noises.size()) - 1;
  const Mat & gain = gains[t + 1];
  Vec u = Vec::Zero(gain.rows());
  for (int s = 0; s <= t; ++s) {
    if (noises[s].size() != products.state_dim()) {
      throw InvalidArgument("control_error_nonrecursive: noise vector has wrong length");
    }
    u.noalias() -= (gain * products.noise_map(s, t)) * noises[s];
  }
  return u;
}

Deviations first_order_deviations(const TransitionProducts & products, const MatSeq & gains,
                                  std::span<const Vec> noises)
{
  const int k = products.horizon();
  if (static_cast<int>(noises.size()) != k) {
    throw InvalidArgument("first_order_deviations: need exactly K noise vectors");
  }
  Deviations dev;
  dev.state.reserve(k + 1);
  dev.control.reserve(k);
  dev.state.push_back(Vec::Zero(products.state_dim()));
  dev.control.push_back(Vec::Zero(gains.front().rows()));
  for (int t = 0; t < k; ++t) {
    dev.state.push_back(state_error_nonrecursive(products, noises.first(t + 1)));
    if (t + 1 < k) {
      dev.control.push_back(control_error_nonrecursive(products, gains, noises.first(t + 1)));
    }
  }
  return dev;
}

// ---------------------------------------------------------------------------
// Cost linearization

CostLinearization linearize_cost(const CostSpec & cost, const NominalTrajectory & nominal)
{
  const int k = nominal.horizon();
  if (k < 1 || static_cast<int>(nominal.states.size()) != k + 1) {
    throw InvalidArgument("linearize_cost: nominal needs K >= 1 controls and K+1 states");
  }
  CostLinearization lin;
  lin.cx.reserve(k);
  lin.cu.reserve(k);
  for (int t = 0; t < k; ++t) {
    const Vec & x = nominal.states[t];
    const Vec & u = nominal.controls[t];
    lin.cx.push_back(cost.stage_grad_x(t, x, u));
    lin.cu.push_back(cost.stage_grad_u(t, x, u));
    lin.nominal_cost += cost.stage(t, x, u);
    if (!lin.cx.back().allFinite() || !lin.cu.back().allFinite()) {
      std::ostringstream os;
      os << "linearize_cost: cost gradient is not finite at t=" << t;
      throw DomainError(os.str());
    }
  }
  lin.cx_terminal = cost.terminal_grad(nominal.states[k]);
  lin.nominal_cost += cost.terminal(nominal.states[k]);
  if (!lin.cx_terminal.allFinite()) {
    throw DomainError("linearize_cost: terminal cost gradient is not finite");
  }
  return lin;
}

double first_order_cost_error(const CostLinearization & lin, const Deviations & deviations)
{
  const int k = lin.horizon();
  if (static_cast<int>(deviations.state.size()) != k + 1 || static_cast<int>(deviations.control.size()) != k) {
    throw InvalidArgument("first_order_cost_error: need K+1 state and K control deviations");
  }
  double j = 0.0;
  for (int t = 0; t < k; ++t) {
    j += lin.cx[t].dot(deviations.state[t]) + lin.cu[t].dot(deviations.control[t]);
  }
  return j + lin.cx_terminal.dot(deviations.state[k]);
}

// ---------------------------------------------------------------------------
// Coefficient form

CostErrorCoefficients::CostErrorCoefficients(int horizon, int noise_dim, std::vector<VecSeq> table)
: horizon_(horizon), noise_dim_(noise_dim), table_(std::move(table))
{
  if (static_cast<int>(table_.size()) != horizon_ + 1) {
    throw InvalidArgument("CostErrorCoefficients: table must have K+1 rows");
  }
  for (int t = 0; t <= horizon_; ++t) {
    if (static_cast<int>(table_[t].size()) != t) {
      throw InvalidArgument("CostErrorCoefficients: row t must hold t vectors");
    }
  }
}

const Vec & CostErrorCoefficients::at(int s, int t) const
{
  if (t < 1 || t > horizon_ || s < 0 || s >= t) {
    throw InvalidArgument("CostErrorCoefficients: need 0 <= s < t <= K");
  }
  return table_[t][s];
}

VecSeq CostErrorCoefficients::aggregated() const
{
  VecSeq a(horizon_, Vec::Zero(noise_dim_));
  for (int t = 1; t <= horizon_; ++t) {
    for (int s = 0; s < t; ++s) {
      a[s] += table_[t][s];
    }
  }
  return a;
}

double CostErrorCoefficients::evaluate(std::span<const Vec> noises) const
{
  if (static_cast<int>(noises.size()) != horizon_) {
    throw InvalidArgument("CostErrorCoefficients::evaluate: need exactly K noise vectors");
  }
  double j = 0.0;
  for (int t = 1; t <= horizon_; ++t) {
    for (int s = 0; s < t; ++s) {
      j += table_[t][s].dot(noises[s]);
    }
  }
  return j;
}

double CostErrorCoefficients::expected_value(std::span<const Vec> noise_means) const
{
  return evaluate(noise_means);
}

double CostErrorCoefficients::variance(double sigma) const
{
  double v = 0.0;
  for (const auto & a : aggregated()) {
    v += a.squaredNorm();
  }
  return sigma * sigma * v;
}

CostErrorCoefficients cost_error_coefficients(const CostLinearization & lin, const TransitionProducts & products,
                                              const MatSeq & gains)
{
  const int k = products.horizon();
  if (lin.horizon() != k || static_cast<int>(gains.size()) != k) {
    throw InvalidArgument("cost_error_coefficients: inconsistent horizons");
  }
  const int n = products.state_dim();
  std::vector<VecSeq> table(k + 1);
  for (int t = 1; t <= k; ++t) {
    table[t].reserve(t);
    for (int s = 0; s < t; ++s) {
      const Mat & map = products.noise_map(s, t - 1);
      RowVec row;
      if (t < k) {
        row = lin.cx[t] * map - lin.cu[t] * (gains[t] * map);
      } else {
        row = lin.cx_terminal * map;
      }
      table[t].push_back(row.transpose());
    }
  }
  return CostErrorCoefficients(k, n, std::move(table));
}

LinearityCertificate certify_linear_in_noise(const CostLinearization & lin, const TransitionProducts & products,
                                             const MatSeq & gains, int trials, std::uint64_t seed)
{
  const int k = products.horizon();
  const int n = products.state_dim();
  const auto coeffs = cost_error_coefficients(lin, products, gains);
  auto direct = [&](const VecSeq & noises) {
    return first_order_cost_error(lin, first_order_deviations(products, gains, noises));
  };

  LinearityCertificate cert;
  cert.trials = trials;
  cert.constant_term = direct(VecSeq(k, Vec::Zero(n)));

  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::kRandomInstance)}));
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int i = 0; i < trials; ++i) {
    VecSeq w(k);
    VecSeq v(k);
    for (int t = 0; t < k; ++t) {
      w[t] = standard_normal(rng, n);
      v[t] = standard_normal(rng, n);
    }
    const double a = coef(rng);
    const double b = coef(rng);
    VecSeq mix(k);
    for (int t = 0; t < k; ++t) {
      mix[t] = a * w[t] + b * v[t];
    }
    const double jw = direct(w);
    const double jv = direct(v);
    const double jmix = direct(mix);
    const double scale = std::max({1.0, std::abs(jw), std::abs(jv), std::abs(jmix)});
    cert.max_additivity_error = std::max(cert.max_additivity_error, std::abs(jmix - a * jw - b * jv) / scale);
    cert.max_reconstruction_error =
      std::max(cert.max_reconstruction_error, std::abs(coeffs.evaluate(w) - jw) / std::max(1.0, std::abs(jw)));
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Monte Carlo

Theorem3Stats verify_theorem3(const TrackingPolicy & policy, const CostSpec & cost, double epsilon, int n_samples,
                              std::uint64_t seed, unsigned threads)
{
  if (n_samples < 100) {
    throw InvalidArgument("verify_theorem3: n_samples must be >= 100");
  }
  if (!(epsilon >= 0.0)) {
    throw InvalidArgument("verify_theorem3: epsilon must be >= 0");
  }
  const int k = policy.horizon();
  const int n = static_cast<int>(policy.nominal.states.front().size());
  const TransitionProducts products(closed_loop_matrices(policy.system, policy.gains));
  const CostLinearization lin = linearize_cost(cost, policy.nominal);
  const NoiseModel noise(epsilon, noise_scale(policy.nominal.controls), n);

  std::vector<double> values(n_samples);
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::kTheorem3), i}));
    VecSeq w(k);
    for (auto & wt : w) {
      wt = noise.sample(rng);
    }
    values[i] = first_order_cost_error(lin, first_order_deviations(products, policy.gains, w));
  });

  const Moments m = sample_moments(values);
  Theorem3Stats stats;
  stats.n = n_samples;
  stats.epsilon = epsilon;
  stats.sigma = noise.sigma();
  stats.mean = m.mean;
  stats.sd = m.sd;
  stats.z = m.sd > 0.0 ? m.mean / (m.sd / std::sqrt(static_cast<double>(n_samples))) : 0.0;
  stats.skewness = m.skewness;
  stats.excess_kurtosis = m.excess_kurtosis;
  stats.predicted_variance = cost_error_coefficients(lin, products, policy.gains).variance(noise.sigma());
  return stats;
}

double linearization_gap(const SystemModel & model, const TrackingPolicy & policy, std::span<const Vec> noises)
{
  const int k = policy.horizon();
  const TransitionProducts products(closed_loop_matrices(policy.system, policy.gains));
  const Deviations predicted = first_order_deviations(products, policy.gains, noises);
  Vec x = policy.nominal.states.front();
  double gap = 0.0;
  for (int t = 0; t < k; ++t) {
    x = step_noisy(model, x, feedback_control(policy, t, x), noises[t]);
    gap = std::max(gap, ((x - policy.nominal.states[t + 1]) - predicted.state[t + 1]).norm());
  }
  return gap;
}

}  // namespace tlqr
