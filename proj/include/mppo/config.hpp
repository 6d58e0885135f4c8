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

#ifndef MPPO_CONFIG_HPP_
#define MPPO_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "mppo/dd_env.hpp"
#include "mppo/environment.hpp"
#include "mppo/ising_env.hpp"
#include "mppo/policy.hpp"
#include "mppo/trainer.hpp"

namespace mppo {

enum class Scenario { kQuantumMemory, kIsing };
enum class TaskKind { kDiscrete, kSemiContinuous, kContinuous, kConstrained };

struct PolicyConfig {
  int hidden = 128;
  double forget_bias = 1.0;
  MixtureDensity density = MixtureDensity::kJoint;
  bool operator==(const PolicyConfig&) const = default;
};

// Only the section of the active scenario is serialized; the other one keeps
// its defaults.
struct ExperimentConfig {
  Scenario scenario = Scenario::kIsing;
  TaskKind task = TaskKind::kDiscrete;
  DdConfig quantum_memory;
  IsingConfig ising;
  PolicyConfig policy;
  TrainerConfig trainer;
  std::uint64_t run_seed = 0;
  std::string output_dir;

  // Throws ConfigInvalid naming the offending field.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

std::string to_string(Scenario s);
std::string to_string(TaskKind t);

// Missing fields take their defaults; unknown fields and type errors raise
// ConfigInvalid.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Every field written explicitly, keys sorted.
nlohmann::json to_json(const ExperimentConfig& cfg);
std::string canonical_dump(const ExperimentConfig& cfg);

std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg);

}  // namespace mppo

#endif  // MPPO_CONFIG_HPP_
