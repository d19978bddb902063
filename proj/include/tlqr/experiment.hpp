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

#ifndef TLQR__EXPERIMENT_HPP_
#define TLQR__EXPERIMENT_HPP_

#include "tlqr/dynamics.hpp"
#include "tlqr/lqr.hpp"
#include "tlqr/planner.hpp"
#include "tlqr/simulator.hpp"
#include "tlqr/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tlqr
{

/// Malformed or out-of-domain configuration; `field` is a dotted path such as "model.dt".
class ConfigError : public InvalidArgument
{
public:
  ConfigError(std::string field, const std::string & message)
  : InvalidArgument(field.empty() ? message : "config field '" + field + "': " + message), field_(std::move(field))
  {
  }
  const std::string & field() const noexcept { return field_; }

private:
  std::string field_;
};

struct ModelConfig
{
  std::string name = "car";
  double wheelbase = 0.5;
  double dt = 0.7;
  double v_max = 0.6;
  double phi_max = 1.5707963267948966;
  std::string integrator = "euler";
};

struct PlannerConfig
{
  double r_u = 0.1;
  double r_g = 100.0;
  double r_b = 100.0;
  std::vector<double> goal_weights{1.0, 1.0, 0.5};
  double tolerance = 1e-6;
  int max_iters = 500;
};

struct LqrConfig
{
  std::vector<double> wx{1.0, 1.0, 1.0};
  std::vector<double> wu{1.0, 1.0};
  std::vector<double> wx_terminal{1.0, 1.0, 1.0};
};

struct SweepConfig
{
  double eps_start = 0.01;
  double eps_step = 0.01;
  double eps_end = 0.15;
  int n_runs = 100;
};

struct LdpConfig
{
  double delta = 0.3;
  std::vector<double> epsilons{0.04, 0.045, 0.05, 0.055, 0.06, 0.07, 0.08, 0.09};
  int n_runs = 2000;
  int horizon_index = 20;  // defaults to the horizon when omitted from JSON
};

struct VerifyConfig
{
  double epsilon = 0.05;
  int n_samples = 100000;
  int lemma_instances = 1000;
  int riccati_instances = 100;
};

struct ExperimentConfig
{
  ModelConfig model;
  std::vector<double> x0{-1.5, 0.5, 0.0};
  std::vector<double> x_g{-0.5, 1.0, 0.0};
  int horizon = 20;
  PlannerConfig planner;
  LqrConfig lqr;
  SweepConfig sweep;
  LdpConfig ldp;
  VerifyConfig verify;
  std::uint64_t master_seed = 20180101;
};

/// Strict parse: unknown keys and wrong types are errors. The sections planner, lqr,
/// sweep, ldp and verify may be omitted (defaults apply); model, x0, x_g, horizon and
/// master_seed are required.
ExperimentConfig config_from_json(const nlohmann::json & j);
nlohmann::json config_to_json(const ExperimentConfig & config);

/// Reads and validates a UTF-8 JSON file. Syntax errors report line and column.
ExperimentConfig load_config(const std::string & path);

/// Throws ConfigError naming the first out-of-domain field.
void validate_config(const ExperimentConfig & config);

/// FNV-1a 64 of the canonical (sorted-key) JSON serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig & config);

/// Planned nominal, tracking policy and everything needed to run experiments on it.
struct Experiment
{
  std::unique_ptr<SystemModel> model;
  CostSpec cost;
  LqrWeights weights;
  PlannerOptions planner_options;
  PlannerReport report;
  TrackingPolicy policy;
};

std::unique_ptr<SystemModel> make_model(const ModelConfig & config);
CostSpec make_cost(const ExperimentConfig & config, const SystemModel & model);
LqrWeights make_weights(const ExperimentConfig & config);

/// Optimizes the nominal trajectory and synthesizes the LQR tracker.
Experiment build_experiment(const ExperimentConfig & config);

}  // namespace tlqr

#endif  // TLQR__EXPERIMENT_HPP_
