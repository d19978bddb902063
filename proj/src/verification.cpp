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

#include "tlqr/verification.hpp"

#include "tlqr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tlqr
{

using nlohmann::json;

namespace
{

// Tolerances of the property suites.
constexpr double kLemma1RelTol = 1e-9;
constexpr double kLemma2AbsTol = 1e-12;
constexpr double kReconstructionTol = 1e-9;
constexpr double kRiccatiFixtureTol = 1e-12;
constexpr double kValueIdentityRelTol = 1e-8;
constexpr double kZBound = 4.0;
constexpr double kSkewBound = 0.1;
constexpr double kKurtosisBound = 0.2;
constexpr double kVarianceRelTol = 0.05;
constexpr double kRateRecoveryTol = 1e-10;
constexpr double kRateR2Min = 0.8;
constexpr double kExitMin = 0.01;
constexpr double kExitMax = 0.9;

json number_or_null(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

// x~_{t+1} = A_t x~_t + B_t u~_t + w_t with u~_t = -L_t x~_t, starting from zero.
VecSeq recursive_state_errors(const LtvSystem & sys, const MatSeq & gains, const VecSeq & noises)
{
  VecSeq x{Vec::Zero(sys.state_dim())};
  for (int t = 0; t < sys.horizon(); ++t) {
    const Vec u = -gains[t] * x.back();
    x.push_back(sys.a[t] * x.back() + sys.b[t] * u + noises[t]);
  }
  return x;
}

RowVec uniform_row(Rng & rng, int n)
{
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  RowVec r(n);
  for (int i = 0; i < n; ++i) {
    r[i] = entry(rng);
  }
  return r;
}

}  // namespace

Check make_check(std::string name, double value, const std::string & relation, double bound)
{
  bool pass = false;
  if (relation == "<=") {
    pass = value <= bound;
  } else if (relation == ">=") {
    pass = value >= bound;
  } else if (relation == "<") {
    pass = value < bound;
  } else if (relation == "==") {
    pass = value == bound;
  } else {
    throw InvalidArgument("make_check: unknown relation '" + relation + "'");
  }
  return {std::move(name), value, relation, bound, pass};
}

bool VerificationReport::passed() const
{
  return std::all_of(checks.begin(), checks.end(), [](const Check & c) { return c.pass; });
}

void VerificationReport::append(const VerificationReport & other)
{
  for (auto c : other.checks) {
    if (other.suite != suite) {
      c.name = other.suite + "." + c.name;
    }
    checks.push_back(std::move(c));
  }
  if (other.theorem3) {
    theorem3 = other.theorem3;
  }
  if (other.rate_fit) {
    rate_fit = other.rate_fit;
  }
  exits.insert(exits.end(), other.exits.begin(), other.exits.end());
}

json report_to_json(const VerificationReport & report)
{
  json j;
  j["suite"] = report.suite;
  j["pass"] = report.passed();
  j["checks"] = json::array();
  for (const auto & c : report.checks) {
    j["checks"].push_back(
      {{"name", c.name}, {"value", number_or_null(c.value)}, {"relation", c.relation}, {"bound", c.bound},
       {"pass", c.pass}});
  }
  if (report.theorem3) {
    const auto & s = *report.theorem3;
    j["theorem3"] = {{"n", s.n},
                     {"epsilon", s.epsilon},
                     {"mean", s.mean},
                     {"sd", s.sd},
                     {"z", s.z},
                     {"skewness", s.skewness},
                     {"kurtosis", s.excess_kurtosis},
                     {"predicted_variance", s.predicted_variance}};
  }
  if (report.rate_fit) {
    j["rate_fit"] = {{"slope", report.rate_fit->slope},
                     {"intercept", report.rate_fit->intercept},
                     {"r_squared", report.rate_fit->r_squared},
                     {"n_points", report.rate_fit->n_points}};
  }
  if (!report.exits.empty()) {
    j["exits"] = json::array();
    for (const auto & e : report.exits) {
      j["exits"].push_back({{"epsilon", e.epsilon},
                            {"delta", e.delta},
                            {"n_runs", e.n_runs},
                            {"n_exits", e.n_exits},
                            {"p_hat", e.p_hat},
                            {"wilson_lo", e.wilson_lo},
                            {"wilson_hi", e.wilson_hi}});
    }
  }
  return j;
}

LtvSystem random_ltv(Rng & rng, int state_dim, int control_dim, int horizon)
{
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  const auto draw = [&](int rows, int cols) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int k = 0; k < cols; ++k) {
        m(i, k) = entry(rng);
      }
    }
    return m;
  };
  LtvSystem sys;
  for (int t = 0; t < horizon; ++t) {
    sys.a.push_back(draw(state_dim, state_dim));
    sys.b.push_back(draw(state_dim, control_dim));
  }
  return sys;
}

RandomLtvInstance random_ltv_instance(Rng & rng)
{
  std::uniform_int_distribution<int> nx(1, 4);
  std::uniform_int_distribution<int> nu(1, 2);
  std::uniform_int_distribution<int> k(1, 20);
  const int n = nx(rng);
  const int m = nu(rng);
  const int horizon = k(rng);
  RandomLtvInstance inst;
  inst.system = random_ltv(rng, n, m, horizon);
  inst.weights = LqrWeights::identity(horizon, n, m);
  inst.solution = riccati_backward(inst.system, inst.weights);
  return inst;
}

VerificationReport verify_lemmas(const ExperimentConfig & config, unsigned threads)
{
  const auto n = static_cast<std::size_t>(config.verify.lemma_instances);
  std::vector<double> lemma1(n, 0.0);
  std::vector<double> lemma2(n, 0.0);
  std::vector<double> reconstruction(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(derive_seed(config.master_seed, {static_cast<std::uint64_t>(StreamTag::kRandomInstance), i}));
    const auto inst = random_ltv_instance(rng);
    const int k = inst.system.horizon();
    const int nx = inst.system.state_dim();
    VecSeq noises;
    for (int t = 0; t < k; ++t) {
      noises.push_back(standard_normal(rng, nx));
    }
    const auto & gains = inst.solution.gains;
    const TransitionProducts products(closed_loop_matrices(inst.system, gains));
    const VecSeq reference = recursive_state_errors(inst.system, gains, noises);

    for (int t = 0; t < k; ++t) {
      const std::span<const Vec> prefix(noises.data(), static_cast<std::size_t>(t) + 1);
      const Vec x = state_error_nonrecursive(products, prefix);
      const double scale = reference[t + 1].norm();
      const double err = (x - reference[t + 1]).norm();
      lemma1[i] = std::max(lemma1[i], scale > 0.0 ? err / scale : err);
      if (t + 1 <= k - 1) {
        const Vec u = control_error_nonrecursive(products, gains, prefix);
        lemma2[i] = std::max(lemma2[i], (u + gains[t + 1] * x).cwiseAbs().maxCoeff());
      }
    }

    // Random stage/terminal gradients stand in for a cost linearization.
    CostLinearization lin;
    const int nu = inst.system.control_dim();
    for (int t = 0; t < k; ++t) {
      lin.cx.push_back(uniform_row(rng, nx));
      lin.cu.push_back(uniform_row(rng, nu));
    }
    lin.cx_terminal = uniform_row(rng, nx);
    const auto coeffs = cost_error_coefficients(lin, products, gains);
    const double direct = first_order_cost_error(lin, first_order_deviations(products, gains, noises));
    reconstruction[i] = std::abs(coeffs.evaluate(noises) - direct) / std::max(1.0, std::abs(direct));
  });

  VerificationReport r;
  r.suite = "lemmas";
  r.checks.push_back(make_check("lemma1_max_relative_error", *std::max_element(lemma1.begin(), lemma1.end()), "<=",
                                kLemma1RelTol));
  r.checks.push_back(make_check("lemma2_max_abs_residual", *std::max_element(lemma2.begin(), lemma2.end()), "<=",
                                kLemma2AbsTol));
  r.checks.push_back(make_check("coefficient_reconstruction_max_error",
                                *std::max_element(reconstruction.begin(), reconstruction.end()), "<=",
                                kReconstructionTol));
  r.checks.push_back(make_check("instances", static_cast<double>(n), ">=", 1.0));
  return r;
}

VerificationReport verify_riccati(const ExperimentConfig & config, const Experiment & experiment)
{
  VerificationReport r;
  r.suite = "riccati";

  // Scalar fixture A = B = Wx = Wu = 1, K = 2: P = (1.6, 1.5, 1), L = (0.6, 0.5).
  LtvSystem scalar;
  scalar.a.assign(2, Mat::Ones(1, 1));
  scalar.b.assign(2, Mat::Ones(1, 1));
  const auto fixture = riccati_backward(scalar, LqrWeights::identity(2, 1, 1));
  const double expected_p[] = {1.6, 1.5, 1.0};
  const double expected_l[] = {0.6, 0.5};
  double fixture_err = 0.0;
  for (int t = 0; t < 3; ++t) {
    fixture_err = std::max(fixture_err, std::abs(fixture.riccati[t](0, 0) - expected_p[t]));
  }
  for (int t = 0; t < 2; ++t) {
    fixture_err = std::max(fixture_err, std::abs(fixture.gains[t](0, 0) - expected_l[t]));
  }
  r.checks.push_back(make_check("scalar_fixture_P0", fixture.riccati[0](0, 0), "==", 1.6));
  r.checks.push_back(make_check("scalar_fixture_L0", fixture.gains[0](0, 0), "==", 0.6));
  r.checks.push_back(make_check("scalar_fixture_max_abs_error", fixture_err, "<=", kRiccatiFixtureTol));

  // Value identity: x0' P_0 x0 equals the simulated closed-loop quadratic cost.
  double worst = 0.0;
  for (int i = 0; i < config.verify.riccati_instances; ++i) {
    Rng rng(derive_seed(config.master_seed,
                        {static_cast<std::uint64_t>(StreamTag::kRandomInstance), 1000000u + static_cast<unsigned>(i)}));
    const auto inst = random_ltv_instance(rng);
    const auto & sys = inst.system;
    Vec x = standard_normal(rng, sys.state_dim());
    const double predicted = x.dot(inst.solution.riccati[0] * x);
    double cost = 0.0;
    for (int t = 0; t < sys.horizon(); ++t) {
      const Vec u = -inst.solution.gains[t] * x;
      cost += x.dot(inst.weights.wx[t] * x) + u.dot(inst.weights.wu[t] * u);
      x = sys.a[t] * x + sys.b[t] * u;
    }
    cost += x.dot(inst.weights.wx.back() * x);
    worst = std::max(worst, std::abs(predicted - cost) / std::max(std::abs(cost), 1e-300));
  }
  r.checks.push_back(make_check("value_identity_max_relative_error", worst, "<=", kValueIdentityRelTol));

  // Structural invariants on the configured tracking policy.
  double asym = 0.0;
  double min_eig = std::numeric_limits<double>::infinity();
  for (const auto & p : experiment.policy.riccati) {
    asym = std::max(asym, (p - p.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat>(p).eigenvalues().minCoeff());
  }
  r.checks.push_back(make_check("policy_riccati_max_asymmetry", asym, "==", 0.0));
  r.checks.push_back(make_check("policy_riccati_min_eigenvalue", min_eig, ">=", -1e-9));
  return r;
}

VerificationReport verify_theorem3_suite(const ExperimentConfig & config, const Experiment & experiment,
                                         unsigned threads)
{
  VerificationReport r;
  r.suite = "theorem3";
  const auto & policy = experiment.policy;
  const TransitionProducts products(policy.closed_loop);
  const auto lin = linearize_cost(experiment.cost, policy.nominal);
  const auto cert = certify_linear_in_noise(lin, products, policy.gains, 1000, config.master_seed);
  r.checks.push_back(make_check("constant_term", cert.constant_term, "==", 0.0));
  r.checks.push_back(
    make_check("coefficient_reconstruction_max_error", cert.max_reconstruction_error, "<=", kReconstructionTol));

  const auto stats = verify_theorem3(policy, experiment.cost, config.verify.epsilon, config.verify.n_samples,
                                     config.master_seed, threads);
  r.theorem3 = stats;
  if (stats.sd == 0.0) {
    r.checks.push_back(make_check("mean", stats.mean, "==", 0.0));
    r.checks.push_back(make_check("predicted_variance", stats.predicted_variance, "==", 0.0));
    return r;
  }
  r.checks.push_back(make_check("abs_z", std::abs(stats.z), "<=", kZBound));
  r.checks.push_back(make_check("abs_skewness", std::abs(stats.skewness), "<=", kSkewBound));
  r.checks.push_back(make_check("abs_excess_kurtosis", std::abs(stats.excess_kurtosis), "<=", kKurtosisBound));
  r.checks.push_back(make_check("variance_relative_error",
                                std::abs(stats.sd * stats.sd / stats.predicted_variance - 1.0), "<=",
                                kVarianceRelTol));
  return r;
}

VerificationReport verify_ldp(const ExperimentConfig & config, const Experiment & experiment, unsigned threads)
{
  VerificationReport r;
  r.suite = "ldp";

  // p(eps) = exp(-a / eps^2) is exactly linear in 1 / eps^2.
  constexpr double a = 0.02;
  std::vector<ExitEstimate> synthetic;
  for (const double eps : {0.05, 0.1, 0.15}) {
    ExitEstimate e;
    e.epsilon = eps;
    e.p_hat = std::exp(-a / (eps * eps));
    synthetic.push_back(e);
  }
  const auto synthetic_fit = fit_rate(synthetic);
  r.checks.push_back(make_check("synthetic_slope_error", std::abs(synthetic_fit.slope + a), "<=", kRateRecoveryTol));
  r.checks.push_back(
    make_check("synthetic_r_squared_deficit", std::abs(1.0 - synthetic_fit.r_squared), "<=", kRateRecoveryTol));

  const auto drift = feedback_drift(*experiment.model, experiment.policy);
  const double nominal_action = action_functional(drift, {experiment.policy.nominal.states, drift.dt}, 1.0);
  r.checks.push_back(make_check("nominal_action", nominal_action, "==", 0.0));

  r.exits = exit_sweep(experiment.policy, *experiment.model, config.ldp.delta, config.ldp.epsilons,
                       config.ldp.horizon_index, config.ldp.n_runs, config.master_seed, threads);
  int outside = 0;
  for (const auto & e : r.exits) {
    outside += (e.p_hat < kExitMin || e.p_hat > kExitMax) ? 1 : 0;
  }
  r.checks.push_back(make_check("grid_points_outside_estimable_range", outside, "==", 0.0));
  try {
    const auto fit = fit_rate(r.exits);
    r.rate_fit = fit;
    r.checks.push_back(make_check("rate_slope", fit.slope, "<", 0.0));
    r.checks.push_back(make_check("rate_r_squared", fit.r_squared, ">=", kRateR2Min));
  } catch (const InsufficientData &) {
    r.checks.push_back(make_check("rate_fit_points", 0.0, ">=", 3.0));
  }
  return r;
}

VerificationReport run_verification(const std::string & suite, const ExperimentConfig & config, unsigned threads)
{
  const auto & names = verification_suites();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw InvalidArgument("unknown verification suite '" + suite + "' (lemmas|theorem3|ldp|riccati|all)");
  }
  const bool all = suite == "all";
  VerificationReport report;
  report.suite = suite;
  if (all || suite == "lemmas") {
    report.append(verify_lemmas(config, threads));
  }
  if (all || suite != "lemmas") {
    const Experiment experiment = build_experiment(config);
    if (all || suite == "riccati") {
      report.append(verify_riccati(config, experiment));
    }
    if (all || suite == "theorem3") {
      report.append(verify_theorem3_suite(config, experiment, threads));
    }
    if (all || suite == "ldp") {
      report.append(verify_ldp(config, experiment, threads));
    }
  }
  return report;
}

}  // namespace tlqr
