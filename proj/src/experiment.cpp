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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace tlqr
{

using nlohmann::json;

namespace
{

// Consumes the keys of one JSON object; anything left over is an unknown key.
class ObjectReader
{
public:
  ObjectReader(const json & j, std::string prefix) : j_(j), prefix_(std::move(prefix))
  {
    if (!j_.is_object()) {
      throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected a JSON object");
    }
  }

  std::string path(const std::string & key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json * find(const std::string & key, bool required)
  {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) {
      if (required) {
        throw ConfigError(path(key), "missing required field");
      }
      return nullptr;
    }
    return &*it;
  }

  void number(const std::string & key, double & out, bool required = false)
  {
    if (const json * v = find(key, required)) {
      if (!v->is_number()) {
        throw ConfigError(path(key), "expected a number");
      }
      out = v->get<double>();
    }
  }

  void integer(const std::string & key, int & out, bool required = false)
  {
    if (const json * v = find(key, required)) {
      if (!v->is_number_integer()) {
        throw ConfigError(path(key), "expected an integer");
      }
      if (v->is_number_unsigned() ? v->get<std::uint64_t>() > std::numeric_limits<int>::max()
                                  : v->get<std::int64_t>() < std::numeric_limits<int>::min()) {
        throw ConfigError(path(key), "integer out of range");
      }
      out = v->get<int>();
    }
  }

  void unsigned64(const std::string & key, std::uint64_t & out, bool required = false)
  {
    if (const json * v = find(key, required)) {
      if (!v->is_number_unsigned()) {
        throw ConfigError(path(key), "expected a non-negative 64-bit integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void string(const std::string & key, std::string & out, bool required = false)
  {
    if (const json * v = find(key, required)) {
      if (!v->is_string()) {
        throw ConfigError(path(key), "expected a string");
      }
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string & key, std::vector<double> & out, bool required = false)
  {
    if (const json * v = find(key, required)) {
      if (!v->is_array()) {
        throw ConfigError(path(key), "expected an array of numbers");
      }
      std::vector<double> values;
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) {
          throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "expected a number");
        }
        values.push_back((*v)[i].get<double>());
      }
      out = std::move(values);
    }
  }

  void section(const std::string & key, const std::function<void(ObjectReader &)> & fn, bool required = false)
  {
    if (const json * v = find(key, required)) {
      ObjectReader sub(*v, path(key));
      fn(sub);
      sub.finish();
    }
  }

  void finish() const
  {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(path(it.key()), "unknown key");
      }
    }
  }

private:
  const json & j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string & field, const std::string & message)
{
  if (!ok) {
    throw ConfigError(field, message);
  }
}

void require_finite(const std::vector<double> & v, const std::string & field)
{
  for (std::size_t i = 0; i < v.size(); ++i) {
    require(std::isfinite(v[i]), field + "[" + std::to_string(i) + "]", "must be finite");
  }
}

void require_length(const std::vector<double> & v, std::size_t n, const std::string & field)
{
  require(v.size() == n, field, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
}

void require_nonnegative(const std::vector<double> & v, const std::string & field)
{
  for (std::size_t i = 0; i < v.size(); ++i) {
    require(v[i] >= 0.0, field + "[" + std::to_string(i) + "]", "must be >= 0");
  }
}

Vec to_vec(const std::vector<double> & v)
{
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// 1-based line and column of a byte offset.
std::string position_of(const std::string & text, std::size_t byte)
{
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

ExperimentConfig config_from_json(const json & j)
{
  ExperimentConfig c;
  constexpr int kUnset = std::numeric_limits<int>::min();
  c.ldp.horizon_index = kUnset;  // defaults to the horizon when not given
  ObjectReader root(j, "");
  root.section(
    "model",
    [&](ObjectReader & r) {
      r.string("name", c.model.name, true);
      r.number("wheelbase", c.model.wheelbase, true);
      r.number("dt", c.model.dt, true);
      r.number("v_max", c.model.v_max, true);
      r.number("phi_max", c.model.phi_max, true);
      r.string("integrator", c.model.integrator);
    },
    true);
  root.numbers("x0", c.x0, true);
  root.numbers("x_g", c.x_g, true);
  root.integer("horizon", c.horizon, true);
  root.section("planner", [&](ObjectReader & r) {
    r.number("r_u", c.planner.r_u);
    r.number("r_g", c.planner.r_g);
    r.number("r_b", c.planner.r_b);
    r.numbers("goal_weights", c.planner.goal_weights);
    r.number("tolerance", c.planner.tolerance);
    r.integer("max_iters", c.planner.max_iters);
  });
  root.section("lqr", [&](ObjectReader & r) {
    r.numbers("wx", c.lqr.wx);
    r.numbers("wu", c.lqr.wu);
    r.numbers("wx_terminal", c.lqr.wx_terminal);
  });
  root.section("sweep", [&](ObjectReader & r) {
    r.number("eps_start", c.sweep.eps_start);
    r.number("eps_step", c.sweep.eps_step);
    r.number("eps_end", c.sweep.eps_end);
    r.integer("n_runs", c.sweep.n_runs);
  });
  root.section("ldp", [&](ObjectReader & r) {
    r.number("delta", c.ldp.delta);
    r.numbers("epsilons", c.ldp.epsilons);
    r.integer("n_runs", c.ldp.n_runs);
    r.integer("horizon_index", c.ldp.horizon_index);
  });
  root.section("verify", [&](ObjectReader & r) {
    r.number("epsilon", c.verify.epsilon);
    r.integer("n_samples", c.verify.n_samples);
    r.integer("lemma_instances", c.verify.lemma_instances);
    r.integer("riccati_instances", c.verify.riccati_instances);
  });
  root.unsigned64("master_seed", c.master_seed, true);
  root.finish();
  if (c.ldp.horizon_index == kUnset) {
    c.ldp.horizon_index = c.horizon;
  }
  validate_config(c);
  return c;
}

json config_to_json(const ExperimentConfig & c)
{
  json j;
  j["model"] = {{"name", c.model.name},   {"wheelbase", c.model.wheelbase}, {"dt", c.model.dt},
                {"v_max", c.model.v_max}, {"phi_max", c.model.phi_max},     {"integrator", c.model.integrator}};
  j["x0"] = c.x0;
  j["x_g"] = c.x_g;
  j["horizon"] = c.horizon;
  j["planner"] = {{"r_u", c.planner.r_u},
                  {"r_g", c.planner.r_g},
                  {"r_b", c.planner.r_b},
                  {"goal_weights", c.planner.goal_weights},
                  {"tolerance", c.planner.tolerance},
                  {"max_iters", c.planner.max_iters}};
  j["lqr"] = {{"wx", c.lqr.wx}, {"wu", c.lqr.wu}, {"wx_terminal", c.lqr.wx_terminal}};
  j["sweep"] = {{"eps_start", c.sweep.eps_start},
                {"eps_step", c.sweep.eps_step},
                {"eps_end", c.sweep.eps_end},
                {"n_runs", c.sweep.n_runs}};
  j["ldp"] = {{"delta", c.ldp.delta},
              {"epsilons", c.ldp.epsilons},
              {"n_runs", c.ldp.n_runs},
              {"horizon_index", c.ldp.horizon_index}};
  j["verify"] = {{"epsilon", c.verify.epsilon},
                 {"n_samples", c.verify.n_samples},
                 {"lemma_instances", c.verify.lemma_instances},
                 {"riccati_instances", c.verify.riccati_instances}};
  j["master_seed"] = c.master_seed;
  return j;
}

void validate_config(const ExperimentConfig & c)
{
  require(c.model.name == "car", "model.name", "unknown model '" + c.model.name + "' (available: car)");
  require(std::isfinite(c.model.wheelbase) && c.model.wheelbase > 0.0, "model.wheelbase", "must be > 0");
  require(std::isfinite(c.model.dt) && c.model.dt > 0.0, "model.dt", "must be > 0");
  require(std::isfinite(c.model.v_max) && c.model.v_max > 0.0, "model.v_max", "must be > 0");
  require(c.model.phi_max > 0.0 && c.model.phi_max <= std::numbers::pi / 2.0, "model.phi_max",
          "must lie in (0, pi/2]");
  require(c.model.integrator == "euler" || c.model.integrator == "rk4", "model.integrator",
          "must be 'euler' or 'rk4'");

  require_length(c.x0, 3, "x0");
  require_finite(c.x0, "x0");
  require_length(c.x_g, 3, "x_g");
  require_finite(c.x_g, "x_g");
  require(c.horizon >= 1, "horizon", "must be >= 1");

  require(std::isfinite(c.planner.r_u) && c.planner.r_u >= 0.0, "planner.r_u", "must be >= 0");
  require(std::isfinite(c.planner.r_g) && c.planner.r_g > 0.0, "planner.r_g",
          "must be > 0 (the goal is always declared)");
  require(std::isfinite(c.planner.r_b) && c.planner.r_b >= 0.0, "planner.r_b", "must be >= 0");
  require_length(c.planner.goal_weights, 3, "planner.goal_weights");
  require_finite(c.planner.goal_weights, "planner.goal_weights");
  require_nonnegative(c.planner.goal_weights, "planner.goal_weights");
  require(std::isfinite(c.planner.tolerance) && c.planner.tolerance > 0.0, "planner.tolerance", "must be > 0");
  require(c.planner.max_iters >= 0, "planner.max_iters", "must be >= 0");

  require_length(c.lqr.wx, 3, "lqr.wx");
  require_finite(c.lqr.wx, "lqr.wx");
  require_nonnegative(c.lqr.wx, "lqr.wx");
  require_length(c.lqr.wx_terminal, 3, "lqr.wx_terminal");
  require_finite(c.lqr.wx_terminal, "lqr.wx_terminal");
  require_nonnegative(c.lqr.wx_terminal, "lqr.wx_terminal");
  require_length(c.lqr.wu, 2, "lqr.wu");
  require_finite(c.lqr.wu, "lqr.wu");
  for (std::size_t i = 0; i < c.lqr.wu.size(); ++i) {
    require(c.lqr.wu[i] > 0.0, "lqr.wu[" + std::to_string(i) + "]", "must be > 0 (Wu must be positive definite)");
  }

  require(std::isfinite(c.sweep.eps_start) && c.sweep.eps_start > 0.0, "sweep.eps_start", "must be > 0");
  require(std::isfinite(c.sweep.eps_step) && c.sweep.eps_step > 0.0, "sweep.eps_step", "must be > 0");
  require(std::isfinite(c.sweep.eps_end) && c.sweep.eps_end >= c.sweep.eps_start, "sweep.eps_end",
          "must be >= sweep.eps_start");
  require(c.sweep.n_runs >= 1, "sweep.n_runs", "must be >= 1");

  require(c.ldp.delta > 0.0, "ldp.delta", "must be > 0");
  require(!c.ldp.epsilons.empty(), "ldp.epsilons", "must not be empty");
  for (std::size_t i = 0; i < c.ldp.epsilons.size(); ++i) {
    require(std::isfinite(c.ldp.epsilons[i]) && c.ldp.epsilons[i] > 0.0, "ldp.epsilons[" + std::to_string(i) + "]",
            "must be > 0");
  }
  require(c.ldp.n_runs >= 1, "ldp.n_runs", "must be >= 1");
  require(c.ldp.horizon_index >= 0 && c.ldp.horizon_index <= c.horizon, "ldp.horizon_index",
          "must lie in [0, horizon]");

  require(std::isfinite(c.verify.epsilon) && c.verify.epsilon >= 0.0, "verify.epsilon", "must be >= 0");
  require(c.verify.n_samples >= 100, "verify.n_samples", "must be >= 100");
  require(c.verify.lemma_instances >= 1, "verify.lemma_instances", "must be >= 1");
  require(c.verify.riccati_instances >= 1, "verify.riccati_instances", "must be >= 1");
}

ExperimentConfig load_config(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error & e) {
    throw ConfigError("", path + ": " + position_of(text, e.byte) + ": malformed JSON (" + e.what() + ")");
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig & config)
{
  const std::string canonical = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

std::unique_ptr<SystemModel> make_model(const ModelConfig & config)
{
  CarParams p;
  p.wheelbase = config.wheelbase;
  p.step_period = config.dt;
  p.v_max = config.v_max;
  p.phi_max = config.phi_max;
  p.integrator = config.integrator == "rk4" ? Integrator::kRk4 : Integrator::kEuler;
  return std::make_unique<CarModel>(p);
}

CostSpec make_cost(const ExperimentConfig & config, const SystemModel & model)
{
  CostSpec cost = CostSpec::for_model(model, to_vec(config.x_g));
  cost.r_u = config.planner.r_u;
  cost.r_g = config.planner.r_g;
  cost.r_b = config.planner.r_b;
  cost.goal_weights = to_vec(config.planner.goal_weights);
  return cost;
}

LqrWeights make_weights(const ExperimentConfig & config)
{
  return LqrWeights::constant(config.horizon, to_vec(config.lqr.wx).asDiagonal(), to_vec(config.lqr.wu).asDiagonal(),
                              to_vec(config.lqr.wx_terminal).asDiagonal());
}

Experiment build_experiment(const ExperimentConfig & config)
{
  validate_config(config);
  Experiment e;
  e.model = make_model(config.model);
  e.cost = make_cost(config, *e.model);
  e.weights = make_weights(config);
  e.planner_options.tolerance = config.planner.tolerance;
  e.planner_options.max_iters = config.planner.max_iters;
  auto [plan, report] = optimize_nominal(*e.model, e.cost, to_vec(config.x0), config.horizon, e.planner_options);
  e.report = std::move(report);
  e.policy = synthesize_policy(*e.model, plan, e.weights);
  return e;
}

}  // namespace tlqr
