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

// Command-line front end: train, oracle, replay, export-plots.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "mppo/error.hpp"
#include "mppo/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Memory-proximal policy optimization for quantum control"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "Train a policy and write a run directory");
  train->add_option("config", config_path, "Experiment config (JSON)")->required();

  std::string oracle_config;
  std::string mode = "brute";
  std::uint64_t n = 1000;
  auto* oracle = app.add_subcommand("oracle", "Brute-force or random-search baseline");
  oracle->add_option("config", oracle_config, "Experiment config (JSON)")->required();
  oracle->add_option("--mode", mode, "brute or random")
      ->check(CLI::IsMember({"brute", "random"}));
  oracle->add_option("--n", n, "Number of random draws")->check(CLI::PositiveNumber);

  std::string replay_dir;
  int index = 0;
  auto* replay = app.add_subcommand("replay", "Re-score a stored sequence");
  replay->add_option("run_dir", replay_dir, "Run directory")->required();
  replay->add_option("--index", index, "Rank in best_sequences.json")->required();

  std::string plots_dir;
  auto* plots = app.add_subcommand("export-plots", "Write convergence.csv and sequences.csv");
  plots->add_option("run_dir", plots_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: UsageError: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*train) {
      mppo::cmd_train(config_path, std::cout);
    } else if (*oracle) {
      const auto m = mode == "brute" ? mppo::OracleMode::kBrute : mppo::OracleMode::kRandom;
      mppo::cmd_oracle(oracle_config, m, n, std::cout);
    } else if (*replay) {
      mppo::cmd_replay(replay_dir, index, std::cout);
    } else if (*plots) {
      mppo::cmd_export_plots(plots_dir);
    }
  } catch (const mppo::Error& e) {
    std::cerr << "error: " << mppo::error_code_name(e.code()) << ": " << e.what() << '\n';
    return mppo::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
