// Copyright 2026 The mppo Authors
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

#include "mppo/config.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "mppo/error.hpp"

namespace mppo {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kConfigInvalid, field + ": " + why);
}

// Reads the fields of one JSON object, rejecting keys that were never asked
// for once finish() is called.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(path_.empty() ? "config" : path_, "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      invalid(field(key), "wrong type");
    }
  }

  void get(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null()) {
      out.reset();
    } else if (it->is_number()) {
      out = it->get<double>();
    } else {
      invalid(field(key), "expected a number or null");
    }
  }

  template <class E>
  void get_enum(const char* key, E& out,
                std::initializer_list<std::pair<const char*, E>> names) {
    std::string value;
    const auto it = j_.find(key);
    if (it == j_.end()) {
      seen_.insert(key);
      return;
    }
    get(key, value);
    for (const auto& [name, e] : names) {
      if (value == name) {
        out = e;
        return;
      }
    }
    invalid(field(key), "unknown value '" + value + "'");
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) invalid(field(key.c_str()), "unknown field");
    }
  }

  std::string field(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

const char* axis_name(Pauli p) {
  switch (p) {
    case Pauli::kX:
      return "x";
    case Pauli::kY:
      return "y";
    case Pauli::kZ:
      return "z";
    default:
      return "i";
  }
}

const char* density_name(MixtureDensity d) {
  return d == MixtureDensity::kJoint ? "joint" : "marginal";
}
const char* loss_name(LossMode m) {
  return m == LossMode::kSequence ? "sequence" : "per_step";
}
const char* adapt_name(AdaptMode m) {
  switch (m) {
    case AdaptMode::kOn:
      return "on";
    case AdaptMode::kOff:
      return "off";
    default:
      return "auto";
  }
}

}  // namespace

std::string to_string(Scenario s) {
  return s == Scenario::kIsing ? "ising" : "quantum_memory";
}

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::kDiscrete:
      return "discrete";
    case TaskKind::kSemiContinuous:
      return "semi_continuous";
    case TaskKind::kContinuous:
      return "continuous";
    case TaskKind::kConstrained:
      return "constrained";
  }
  return "discrete";
}

void ExperimentConfig::validate() const {
  if (scenario == Scenario::kQuantumMemory) {
    if (task == TaskKind::kConstrained) {
      invalid("task", "constrained is only defined for the ising scenario");
    }
    quantum_memory.validate();
  } else {
    if (task == TaskKind::kSemiContinuous) {
      invalid("task", "semi_continuous is only defined for quantum_memory");
    }
    ising.validate();
    if (ising.steps() < 1) invalid("ising.total_time", "must span at least one step");
    if (task == TaskKind::kConstrained && !ising.budget) {
      invalid("ising.budget", "required for the constrained task");
    }
  }
  if (policy.hidden < 1) invalid("policy.hidden", "must be positive");
  trainer.validate();
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  Section root(j, "");
  root.get_enum("scenario", cfg.scenario,
                {{"quantum_memory", Scenario::kQuantumMemory},
                 {"ising", Scenario::kIsing}});
  root.get_enum("task", cfg.task,
                {{"discrete", TaskKind::kDiscrete},
                 {"semi_continuous", TaskKind::kSemiContinuous},
                 {"continuous", TaskKind::kContinuous},
                 {"constrained", TaskKind::kConstrained}});
  root.get("run_seed", cfg.run_seed);
  root.get("output_dir", cfg.output_dir);

  if (const json* q = root.child("quantum_memory");
      q && cfg.scenario == Scenario::kQuantumMemory) {
    Section s(*q, "quantum_memory");
    DdConfig& d = cfg.quantum_memory;
    s.get("n_bath_qubits", d.n_bath_qubits);
    s.get("delta_t", d.delta_t);
    s.get("total_time", d.total_time);
    s.get("noise_seed", d.noise_seed);
    s.get("noise_strength", d.noise_strength);
    s.get("max_body", d.max_body);
    s.finish();
  }
  if (const json* q = root.child("ising"); q && cfg.scenario == Scenario::kIsing) {
    Section s(*q, "ising");
    IsingConfig& c = cfg.ising;
    s.get("L", c.sites);
    s.get("J", c.coupling);
    s.get("g", c.transverse);
    s.get("h_initial", c.h_initial);
    s.get("h_target", c.h_target);
    s.get("h_max", c.h_max);
    s.get("delta_t", c.delta_t);
    s.get("total_time", c.total_time);
    s.get("budget", c.budget);
    s.get("operator_scale", c.operator_scale);
    s.get_enum("coupling_axis", c.coupling_axis,
               {{"x", Pauli::kX}, {"y", Pauli::kY}, {"z", Pauli::kZ}});
    s.finish();
  }
  if (const json* q = root.child("policy")) {
    Section s(*q, "policy");
    s.get("hidden", cfg.policy.hidden);
    s.get("forget_bias", cfg.policy.forget_bias);
    s.get_enum("density", cfg.policy.density,
               {{"joint", MixtureDensity::kJoint},
                {"marginal", MixtureDensity::kMarginal}});
    s.finish();
  }
  if (const json* q = root.child("trainer")) {
    Section s(*q, "trainer");
    TrainerConfig& t = cfg.trainer;
    s.get("batch_size", t.batch_size);
    s.get("memory_size", t.memory_size);
    s.get("inner_iters", t.inner_iters);
    s.get("epsilon_init", t.epsilon_init);
    s.get("epsilon_min", t.epsilon_min);
    s.get("epsilon_max", t.epsilon_max);
    s.get("learning_rate", t.learning_rate);
    s.get("sigma_init", t.sigma_init);
    s.get("sigma_min", t.sigma_min);
    s.get("window_length", t.window_length);
    s.get("alpha_min", t.alpha_min);
    s.get("alpha_max", t.alpha_max);
    s.get("max_iterations", t.max_iterations);
    s.get_enum("loss_mode", t.loss_mode,
               {{"sequence", LossMode::kSequence}, {"per_step", LossMode::kPerStep}});
    s.get_enum("adapt", t.adapt,
               {{"auto", AdaptMode::kAuto}, {"on", AdaptMode::kOn}, {"off", AdaptMode::kOff}});
    s.get_enum("advantage", t.baseline,
               {{"mean", AdvantageBaseline::kMean}, {"best", AdvantageBaseline::kBest}});
    s.get("target_reward", t.target_reward);
    s.get("shift_rollouts", t.shift_rollouts);
    s.get("max_grad_norm", t.max_grad_norm);
    s.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kConfigInvalid, "config: cannot open " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigInvalid,
                "config: " + path.string() + " is not valid JSON (" + e.what() + ")");
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["scenario"] = to_string(cfg.scenario);
  j["task"] = to_string(cfg.task);
  j["run_seed"] = cfg.run_seed;
  j["output_dir"] = cfg.output_dir;
  if (cfg.scenario == Scenario::kQuantumMemory) {
    const DdConfig& d = cfg.quantum_memory;
    j["quantum_memory"] = {{"n_bath_qubits", d.n_bath_qubits},
                           {"delta_t", d.delta_t},
                           {"total_time", d.total_time},
                           {"noise_seed", d.noise_seed},
                           {"noise_strength", d.noise_strength},
                           {"max_body", d.max_body}};
  } else {
    const IsingConfig& c = cfg.ising;
    j["ising"] = {{"L", c.sites},
                  {"J", c.coupling},
                  {"g", c.transverse},
                  {"h_initial", c.h_initial},
                  {"h_target", c.h_target},
                  {"h_max", c.h_max},
                  {"delta_t", c.delta_t},
                  {"total_time", c.total_time},
                  {"budget", optional_json(c.budget)},
                  {"operator_scale", c.operator_scale},
                  {"coupling_axis", axis_name(c.coupling_axis)}};
  }
  j["policy"] = {{"hidden", cfg.policy.hidden},
                 {"forget_bias", cfg.policy.forget_bias},
                 {"density", density_name(cfg.policy.density)}};
  const TrainerConfig& t = cfg.trainer;
  j["trainer"] = {{"batch_size", t.batch_size},
                  {"memory_size", t.memory_size},
                  {"inner_iters", t.inner_iters},
                  {"epsilon_init", t.epsilon_init},
                  {"epsilon_min", t.epsilon_min},
                  {"epsilon_max", t.epsilon_max},
                  {"learning_rate", t.learning_rate},
                  {"sigma_init", t.sigma_init},
                  {"sigma_min", t.sigma_min},
                  {"window_length", t.window_length},
                  {"alpha_min", t.alpha_min},
                  {"alpha_max", t.alpha_max},
                  {"max_iterations", t.max_iterations},
                  {"loss_mode", loss_name(t.loss_mode)},
                  {"adapt", adapt_name(t.adapt)},
                  {"advantage", t.baseline == AdvantageBaseline::kMean ? "mean" : "best"},
                  {"target_reward", optional_json(t.target_reward)},
                  {"shift_rollouts", t.shift_rollouts},
                  {"max_grad_norm", t.max_grad_norm}};
  return j;
}

std::string canonical_dump(const ExperimentConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.scenario == Scenario::kQuantumMemory) {
    const DdTask task = cfg.task == TaskKind::kDiscrete       ? DdTask::kDiscrete
                        : cfg.task == TaskKind::kSemiContinuous ? DdTask::kSemiContinuous
                                                               : DdTask::kContinuous;
    return std::make_unique<DdEnvironment>(cfg.quantum_memory, task);
  }
  const IsingTask task = cfg.task == TaskKind::kDiscrete     ? IsingTask::kDiscrete
                         : cfg.task == TaskKind::kContinuous ? IsingTask::kContinuous
                                                             : IsingTask::kConstrained;
  return std::make_unique<IsingEnvironment>(cfg.ising, task);
}

}  // namespace mppo
