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

#ifndef TLQR__VERIFICATION_HPP_
#define TLQR__VERIFICATION_HPP_

#include "tlqr/experiment.hpp"
#include "tlqr/large_deviations.hpp"
#include "tlqr/lqr.hpp"
#include "tlqr/random.hpp"
#include "tlqr/separation.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace tlqr
{

struct Check
{
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=", "<", "=="
  double bound = 0.0;
  bool pass = false;
};

Check make_check(std::string name, double value, const std::string & relation, double bound);

struct VerificationReport
{
  std::string suite;
  std::vector<Check> checks;
  std::optional<Theorem3Stats> theorem3;
  std::optional<RateFit> rate_fit;
  std::vector<ExitEstimate> exits;

  bool passed() const;
  void append(const VerificationReport & other);
};

nlohmann::json report_to_json(const VerificationReport & report);

/// Random LTV system with entries uniform in [-1, 1].
LtvSystem random_ltv(Rng & rng, int state_dim, int control_dim, int horizon);

/// n_x in [1, 4], n_u in [1, 2], K in [1, 20], identity weights, Riccati gains.
struct RandomLtvInstance
{
  LtvSystem system;
  LqrWeights weights;
  RiccatiSolution solution;
};
RandomLtvInstance random_ltv_instance(Rng & rng);

inline const std::vector<std::string> & verification_suites()
{
  static const std::vector<std::string> names{"lemmas", "theorem3", "ldp", "riccati", "all"};
  return names;
}

VerificationReport verify_lemmas(const ExperimentConfig & config, unsigned threads = 1);
VerificationReport verify_riccati(const ExperimentConfig & config, const Experiment & experiment);
VerificationReport verify_theorem3_suite(const ExperimentConfig & config, const Experiment & experiment,
                                         unsigned threads = 1);
VerificationReport verify_ldp(const ExperimentConfig & config, const Experiment & experiment, unsigned threads = 1);

/// Runs one suite by name ("all" runs every suite). Unknown names throw InvalidArgument.
VerificationReport run_verification(const std::string & suite, const ExperimentConfig & config,
                                    unsigned threads = 1);

}  // namespace tlqr

#endif  // TLQR__VERIFICATION_HPP_
