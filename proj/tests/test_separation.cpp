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
#include "tlqr/separation.hpp"
#include "tlqr/stats.hpp"
#include "tlqr/verification.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace tlqr;

namespace
{

Mat scalar(double v)
{
  return Mat::Constant(1, 1, v);
}

Vec vscalar(double v)
{
  return Vec::Constant(1, v);
}

// Brute-force recursion on (A, B, L): x~_{t+1} = A x~ - B L x~ + w.
VecSeq recursive_states(const LtvSystem & sys, const MatSeq & gains, const VecSeq & noises)
{
  VecSeq x{Vec::Zero(sys.state_dim())};
  for (int t = 0; t < sys.horizon(); ++t) {
    x.push_back(sys.a[t] * x.back() - sys.b[t] * (gains[t] * x.back()) + noises[t]);
  }
  return x;
}

VecSeq random_noises(Rng & rng, int k, int n)
{
  VecSeq w;
  for (int t = 0; t < k; ++t) {
    w.push_back(standard_normal(rng, n));
  }
  return w;
}

// Scalar K = 2 fixture: A = B = 1, L = (0.6, 0.5), D = (1, 0.5).
TransitionProducts scalar_products()
{
  return TransitionProducts({scalar(1.0), scalar(0.5)});
}

const Experiment & car_experiment()
{
  static const Experiment e = build_experiment(ExperimentConfig{});
  return e;
}

}  // namespace

TEST_CASE("closed-loop matrices")
{
  LtvSystem sys;
  sys.a = {scalar(1.0), scalar(1.0), scalar(1.0)};
  sys.b = {scalar(1.0), scalar(1.0), scalar(1.0)};
  const auto d = closed_loop_matrices(sys, {scalar(0.5), scalar(0.5), scalar(0.5)});
  CHECK(d[0](0, 0) == 1.0);  // D_0 := A_0
  CHECK(d[1](0, 0) == 0.5);
  CHECK(d[2](0, 0) == 0.5);

  Rng rng(1);
  const auto rnd = random_ltv(rng, 3, 2, 4);
  const auto no_feedback = closed_loop_matrices(rnd, MatSeq(4, Mat::Zero(2, 3)));
  LtvSystem unactuated = rnd;
  unactuated.b.assign(4, Mat::Zero(3, 2));
  const auto no_actuation = closed_loop_matrices(unactuated, MatSeq(4, Mat::Ones(2, 3)));
  for (int t = 0; t < 4; ++t) {
    CHECK(no_feedback[t] == rnd.a[t]);
    CHECK(no_actuation[t] == rnd.a[t]);
  }
  CHECK_THROWS_AS(closed_loop_matrices(rnd, MatSeq(3, Mat::Zero(2, 3))), InvalidArgument);
  CHECK_THROWS_AS(closed_loop_matrices(rnd, MatSeq(4, Mat::Zero(3, 3))), InvalidArgument);
}

TEST_CASE("transition products")
{
  Rng rng(4);
  MatSeq d;
  for (int t = 0; t < 6; ++t) {
    d.push_back(random_ltv(rng, 3, 1, 1).a.front());
  }
  const TransitionProducts p(d);
  for (int t = 0; t < 6; ++t) {
    CHECK(p.product(t, t) == d[t]);
    CHECK(p.product(t + 1, t) == Mat::Identity(3, 3));
  }
  for (int t1 = 0; t1 < 6; ++t1) {
    for (int t2 = t1 + 1; t2 < 6; ++t2) {
      CHECK((p.product(t1, t2) - d[t2] * p.product(t1, t2 - 1)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  CHECK(p.noise_map(2, 4) == p.product(3, 4));
  CHECK_THROWS_AS(p.product(0, 6), InvalidArgument);
  CHECK_THROWS_AS(p.noise_map(3, 2), InvalidArgument);
}

TEST_CASE("state error examples")
{
  const auto p = scalar_products();
  CHECK(state_error_nonrecursive(p, VecSeq{vscalar(0.0), vscalar(0.0)})[0] == 0.0);
  CHECK(state_error_nonrecursive(p, VecSeq{vscalar(1.0), vscalar(1.0)})[0] == doctest::Approx(1.5));
  CHECK_THROWS_AS(state_error_nonrecursive(p, VecSeq{}), InvalidArgument);
  CHECK_THROWS_AS(state_error_nonrecursive(p, VecSeq(3, vscalar(1.0))), InvalidArgument);
  CHECK_THROWS_AS(state_error_nonrecursive(p, VecSeq{Vec::Zero(2)}), InvalidArgument);
}

TEST_CASE("control error examples")
{
  // K = 3 so that u~_2 exists; D_1 = 0.5 and L_2 = 0.5.
  const TransitionProducts p({scalar(1.0), scalar(0.5), scalar(0.5)});
  const MatSeq gains{scalar(0.6), scalar(0.5), scalar(0.5)};
  CHECK(control_error_nonrecursive(p, gains, VecSeq{vscalar(0.0), vscalar(0.0)})[0] == 0.0);
  CHECK(control_error_nonrecursive(p, gains, VecSeq{vscalar(1.0), vscalar(1.0)})[0] == doctest::Approx(-0.75));
  CHECK_THROWS_AS(control_error_nonrecursive(p, gains, VecSeq(3, vscalar(1.0))), InvalidArgument);

  const auto dev = first_order_deviations(p, gains, VecSeq(3, vscalar(1.0)));
  CHECK(dev.state.front()[0] == 0.0);
  CHECK(dev.control.front()[0] == 0.0);
  CHECK(dev.state.size() == 4);
  CHECK(dev.control.size() == 3);
}

TEST_CASE("non-recursive errors match the recursion on random instances")
{
  Rng rng(2024);
  double worst_state = 0.0;
  double worst_control = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = random_ltv_instance(rng);
    const int k = inst.system.horizon();
    const auto & gains = inst.solution.gains;
    const TransitionProducts p(closed_loop_matrices(inst.system, gains));
    const VecSeq w = random_noises(rng, k, inst.system.state_dim());
    const VecSeq ref = recursive_states(inst.system, gains, w);
    const auto dev = first_order_deviations(p, gains, w);
    for (int t = 1; t <= k; ++t) {
      worst_state = std::max(worst_state, (dev.state[t] - ref[t]).norm() / ref[t].norm());
    }
    for (int t = 1; t < k; ++t) {
      worst_control = std::max(worst_control, (dev.control[t] + gains[t] * dev.state[t]).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst_state <= 1e-9);
  CHECK(worst_control <= 1e-12);
}

TEST_CASE("the value of D_0 never matters")
{
  Rng rng(8);
  const auto sys = random_ltv(rng, 3, 2, 6);
  const auto sol = riccati_backward(sys, LqrWeights::identity(6, 3, 2));
  MatSeq d = closed_loop_matrices(sys, sol.gains);
  const TransitionProducts a(d);
  d[0] = Mat::Constant(3, 3, 123.0);
  const TransitionProducts b(d);
  const VecSeq w = random_noises(rng, 6, 3);
  const auto da = first_order_deviations(a, sol.gains, w);
  const auto db = first_order_deviations(b, sol.gains, w);
  for (std::size_t t = 0; t < da.state.size(); ++t) {
    CHECK(da.state[t] == db.state[t]);
  }
}

TEST_CASE("cost linearization")
{
  const CarModel car;
  const Vec x0 = (Vec(3) << -1.5, 0.5, 0.0).finished();
  const VecSeq u{(Vec(2) << 0.3, 0.2).finished(), (Vec(2) << -0.1, 0.4).finished()};
  const auto nominal = rollout_nominal(car, x0, u);

  SUBCASE("effort-only stage cost")
  {
    CostSpec spec = CostSpec::for_model(car, nominal.states.back());
    spec.r_u = 0.1;
    const auto lin = linearize_cost(spec, nominal);
    for (int t = 0; t < 2; ++t) {
      CHECK((lin.cu[t] - 0.2 * u[t].transpose()).norm() <= 1e-15);
      CHECK(lin.cx[t].norm() == 0.0);
    }
    CHECK(lin.cx_terminal.norm() == 0.0);  // terminal state sits at the goal
  }

  SUBCASE("rows match central differences")
  {
    const CostSpec spec = CostSpec::for_model(car, (Vec(3) << -0.5, 1.0, 0.0).finished());
    const auto lin = linearize_cost(spec, nominal);
    const double h = 1e-6;
    for (int t = 0; t < 2; ++t) {
      RowVec fd(2);
      for (int i = 0; i < 2; ++i) {
        Vec up = u[t];
        Vec um = u[t];
        up[i] += h;
        um[i] -= h;
        fd[i] = (spec.stage(t, nominal.states[t], up) - spec.stage(t, nominal.states[t], um)) / (2 * h);
      }
      CHECK((lin.cu[t] - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    }
    RowVec fd(3);
    for (int i = 0; i < 3; ++i) {
      Vec xp = nominal.states[2];
      Vec xm = nominal.states[2];
      xp[i] += h;
      xm[i] -= h;
      fd[i] = (spec.terminal(xp) - spec.terminal(xm)) / (2 * h);
    }
    CHECK((lin.cx_terminal - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    CHECK(lin.nominal_cost == doctest::Approx(nominal_cost(car, spec, x0, u)).epsilon(1e-14));
  }
}

TEST_CASE("coefficient example")
{
  CostLinearization lin;
  lin.cx = {scalar(1.0), scalar(1.0)};
  lin.cu = {scalar(0.0), scalar(0.0)};
  lin.cx_terminal = scalar(1.0);
  const MatSeq gains{scalar(0.6), scalar(0.5)};
  const auto c = cost_error_coefficients(lin, scalar_products(), gains);
  CHECK(c.at(0, 1)[0] == 1.0);
  CHECK(c.at(0, 2)[0] == 0.5);
  CHECK(c.at(1, 2)[0] == 1.0);
  CHECK_THROWS_AS(c.at(2, 2), InvalidArgument);

  CostLinearization zero = lin;
  zero.cx = {scalar(0.0), scalar(0.0)};
  zero.cx_terminal = scalar(0.0);
  const auto z = cost_error_coefficients(zero, scalar_products(), gains);
  for (int t = 1; t <= 2; ++t) {
    for (int s = 0; s < t; ++s) {
      CHECK(z.at(s, t)[0] == 0.0);
    }
  }
  // Aggregated coefficients (1.5, 1): variance = sigma^2 (2.25 + 1).
  CHECK(c.variance(2.0) == doctest::Approx(4.0 * 3.25));
  CHECK(c.expected_value(VecSeq(2, vscalar(0.0))) == 0.0);
}

TEST_CASE("first-order cost error is linear and matches the coefficient form")
{
  Rng rng(77);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto inst = random_ltv_instance(rng);
    const int k = inst.system.horizon();
    const int n = inst.system.state_dim();
    const int m = inst.system.control_dim();
    CostLinearization lin;
    for (int t = 0; t < k; ++t) {
      lin.cx.push_back(standard_normal(rng, n).transpose());
      lin.cu.push_back(standard_normal(rng, m).transpose());
    }
    lin.cx_terminal = standard_normal(rng, n).transpose();
    const TransitionProducts p(closed_loop_matrices(inst.system, inst.solution.gains));
    const VecSeq w = random_noises(rng, k, n);
    const auto dev = first_order_deviations(p, inst.solution.gains, w);
    const double direct = first_order_cost_error(lin, dev);
    const auto coeffs = cost_error_coefficients(lin, p, inst.solution.gains);
    CHECK(std::abs(coeffs.evaluate(w) - direct) <= 1e-9 * std::max(1.0, std::abs(direct)));

    Deviations scaled = dev;
    for (auto & x : scaled.state) {
      x *= 3.0;
    }
    for (auto & u : scaled.control) {
      u *= 3.0;
    }
    CHECK(first_order_cost_error(lin, scaled) == doctest::Approx(3.0 * direct).epsilon(1e-12));
    Deviations zero = dev;
    for (auto & x : zero.state) {
      x.setZero();
    }
    for (auto & u : zero.control) {
      u.setZero();
    }
    CHECK(first_order_cost_error(lin, zero) == 0.0);
  }
}

TEST_CASE("linearity certificate on the car policy")
{
  const auto & e = car_experiment();
  const TransitionProducts p(e.policy.closed_loop);
  const auto lin = linearize_cost(e.cost, e.policy.nominal);
  const auto cert = certify_linear_in_noise(lin, p, e.policy.gains, 200, 5);
  CHECK(cert.constant_term == 0.0);
  CHECK(cert.max_reconstruction_error <= 1e-9);
  CHECK(cert.max_additivity_error <= 1e-9);
}

TEST_CASE("cost error statistics under zero noise")
{
  const auto & e = car_experiment();
  const auto s = verify_theorem3(e.policy, e.cost, 0.0, 200, 1);
  CHECK(s.mean == 0.0);
  CHECK(s.sd == 0.0);
  CHECK(s.predicted_variance == 0.0);
  CHECK_THROWS_AS(verify_theorem3(e.policy, e.cost, 0.05, 99, 1), InvalidArgument);
}

TEST_CASE("cost error is zero-mean Gaussian on the car policy")
{
  const auto & e = car_experiment();
  const auto s = verify_theorem3(e.policy, e.cost, 0.05, 100000, 20240601);
  CHECK(std::abs(s.mean) <= 4.0 * s.sd / std::sqrt(100000.0));
  CHECK(std::abs(s.skewness) <= 0.1);
  CHECK(std::abs(s.excess_kurtosis) <= 0.2);
  CHECK(std::abs(s.sd * s.sd / s.predicted_variance - 1.0) <= 0.05);
}

TEST_CASE("statistics do not depend on the thread count")
{
  const auto & e = car_experiment();
  const auto one = verify_theorem3(e.policy, e.cost, 0.05, 3000, 9, 1);
  const auto four = verify_theorem3(e.policy, e.cost, 0.05, 3000, 9, 4);
  CHECK(one.mean == four.mean);
  CHECK(one.sd == four.sd);
  CHECK(one.skewness == four.skewness);
}

TEST_CASE("linearization gap shrinks faster than the noise")
{
  const auto & e = car_experiment();
  const double base = noise_scale(e.policy.nominal.controls);
  std::vector<double> log_eps;
  std::vector<double> log_gap;
  for (const double eps : {0.01, 0.02, 0.04, 0.08}) {
    double total = 0.0;
    for (int j = 0; j < 100; ++j) {
      Rng rng(derive_seed(99, {static_cast<std::uint64_t>(j)}));
      const NoiseModel noise(eps, base, 3);
      VecSeq w(e.policy.horizon());
      for (auto & v : w) {
        v = noise.sample(rng);
      }
      total += linearization_gap(*e.model, e.policy, w);
    }
    log_eps.push_back(std::log(eps));
    log_gap.push_back(std::log(total / 100.0));
  }
  CHECK(linear_fit(log_eps, log_gap).slope >= 1.5);
}
