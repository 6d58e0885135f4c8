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

#ifndef MPPO_RUNNER_HPP_
#define MPPO_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mppo/config.hpp"
#include "mppo/error.hpp"
#include "mppo/oracle.hpp"
#include "mppo/trainer.hpp"

namespace mppo {

inline constexpr const char* kOutputRootEnv = "MPPO_OUTPUT_ROOT";

// 16 hex digits of FNV-1a over the canonical config dump plus `salt`.
std::string run_id(const ExperimentConfig& cfg, std::string_view salt = {});

// cfg.output_dir, else $MPPO_OUTPUT_ROOT, else ./runs.
std::filesystem::path output_root(const ExperimentConfig& cfg);

// D = 1 - reward for quantum_memory, S2 = reward for ising.
double headline_metric(Scenario scenario, double reward_raw);
const char* headline_name(Scenario scenario);

struct TrainOutcome {
  std::filesystem::path run_dir;
  int iterations = 0;
  double best_reward_raw = 0.0;
  double headline = 0.0;
};

// Trains and writes config_snapshot.json, metrics.jsonl, timing.jsonl,
// best_sequences.json, checkpoint.json and summary.json. Progress lines go to
// `log`.
TrainOutcome run_training(const ExperimentConfig& cfg, std::ostream& log);
TrainOutcome cmd_train(const std::filesystem::path& config_path, std::ostream& log);

enum class OracleMode { kBrute, kRandom };

struct OracleOutcome {
  std::filesystem::path run_dir;
  OracleResult result;
};

// Writes oracle_result.json next to config_snapshot.json and a one-entry
// best_sequences.json, and prints the best reward to 6 decimal places.
OracleOutcome run_oracle(const ExperimentConfig& cfg, OracleMode mode,
                         std::uint64_t n, std::ostream& out);
OracleOutcome cmd_oracle(const std::filesystem::path& config_path, OracleMode mode,
                         std::uint64_t n, std::ostream& out);

struct ReplayReport {
  int index = 0;
  double stored_reward = 0.0;
  double replayed_reward = 0.0;
};

// Re-scores best_sequences.json entry `index` against a fresh environment
// built from config_snapshot.json. Throws MissingArtifact or RewardMismatch.
ReplayReport cmd_replay(const std::filesystem::path& run_dir, int index,
                        std::ostream& out);

inline constexpr double kReplayTolerance = 1e-9;

// Writes convergence.csv and sequences.csv into `run_dir`.
void cmd_export_plots(const std::filesystem::path& run_dir);

// Process exit code for an error code: 2 config, 3 space too large,
// 4 artifact or I/O, 1 otherwise.
int exit_code_for(ErrorCode code);

nlohmann::json sequence_to_json(const ControlSequence& seq);
ControlSequence sequence_from_json(const nlohmann::json& j);

}  // namespace mppo

#endif  // MPPO_RUNNER_HPP_
