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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "mppo/checkpoint.hpp"
#include "mppo/config.hpp"
#include "mppo/error.hpp"
#include "mppo/runner.hpp"

using namespace mppo;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("mppo_runner_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json small_ising(const fs::path& out) {
  return {{"scenario", "ising"},
          {"task", "discrete"},
          {"run_seed", 5},
          {"output_dir", out.string()},
          {"ising", {{"total_time", 0.5}}},
          {"policy", {{"hidden", 8}}},
          {"trainer", {{"max_iterations", 10}, {"memory_size", 16}, {"shift_rollouts", 50}}}};
}

fs::path write_json(const fs::path& path, const json& j) {
  std::ofstream(path) << j.dump(2);
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

std::string error_message(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    CHECK(e.code() == code);
    return e.what();
  }
  FAIL("expected an error");
  return "";
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("config snapshots round-trip") {
  const fs::path dir = scratch_dir("roundtrip");
  for (const json& src :
       {small_ising(dir),
        json{{"scenario", "quantum_memory"},
             {"task", "continuous"},
             {"quantum_memory", {{"noise_strength", 2.5}, {"total_time", 0.032}}},
             {"trainer", {{"target_reward", 0.99}, {"loss_mode", "per_step"}}}},
        json{{"scenario", "ising"},
             {"task", "constrained"},
             {"ising", {{"budget", 120.0}, {"total_time", 3.0}, {"coupling_axis", "z"}}}}}) {
    const ExperimentConfig cfg = parse_config(src);
    const ExperimentConfig back = parse_config(json::parse(canonical_dump(cfg)));
    CHECK(back == cfg);
    CHECK(canonical_dump(back) == canonical_dump(cfg));
  }
  const ExperimentConfig a = parse_config(small_ising(dir));
  ExperimentConfig b = a;
  b.run_seed = 6;
  CHECK(run_id(a) != run_id(b));
  CHECK(run_id(a) == run_id(parse_config(small_ising(dir))));
  CHECK(run_id(a).size() == 16);
  CHECK(run_id(a, "oracle:brute") != run_id(a));
}

TEST_CASE("config errors name the field") {
  const fs::path dir = scratch_dir("errors");
  json j = small_ising(dir);
  j["ising"]["total_time"] = 0.52;
  CHECK(error_message([&] { parse_config(j); }, ErrorCode::kConfigInvalid).find("total_time") !=
        std::string::npos);
  j = small_ising(dir);
  j["trainer"]["learning_rat"] = 0.1;
  CHECK(error_message([&] { parse_config(j); }, ErrorCode::kConfigInvalid).find("learning_rat") !=
        std::string::npos);
  j = small_ising(dir);
  j["policy"]["hidden"] = "wide";
  CHECK(error_message([&] { parse_config(j); }, ErrorCode::kConfigInvalid).find("hidden") !=
        std::string::npos);
  j = small_ising(dir);
  j["task"] = "semi_continuous";
  CHECK(error_message([&] { parse_config(j); }, ErrorCode::kConfigInvalid).find("task") !=
        std::string::npos);
  j = small_ising(dir);
  j["task"] = "constrained";
  CHECK(error_message([&] { parse_config(j); }, ErrorCode::kConfigInvalid).find("budget") !=
        std::string::npos);
  CHECK(error_message([&] { load_config(dir / "absent.json"); }, ErrorCode::kConfigInvalid)
            .find("absent.json") != std::string::npos);
  std::ofstream(dir / "broken.json") << "{\"scenario\": ";
  error_message([&] { load_config(dir / "broken.json"); }, ErrorCode::kConfigInvalid);
}

TEST_CASE("train writes reproducible artifacts") {
  const fs::path dir = scratch_dir("train");
  const fs::path cfg_path = write_json(dir / "cfg.json", small_ising(dir / "runs"));
  std::ostringstream log;
  const TrainOutcome a = cmd_train(cfg_path, log);
  CHECK(a.iterations == 10);
  for (const char* f : {"config_snapshot.json", "metrics.jsonl", "best_sequences.json",
                        "checkpoint.json", "summary.json", "timing.jsonl"}) {
    CHECK_MESSAGE(fs::exists(a.run_dir / f), f);
  }
  CHECK(count_lines(a.run_dir / "metrics.jsonl") == 10);
  CHECK(a.run_dir.filename() == run_id(load_config(cfg_path), "train"));

  const json summary = json::parse(slurp(a.run_dir / "summary.json"));
  CHECK(summary.at("headline_metric") == "S2");
  CHECK(summary.at("best_reward_raw").get<double>() == a.best_reward_raw);
  CHECK(summary.at("iterations") == 10);

  double last = -1.0;
  std::ifstream metrics(a.run_dir / "metrics.jsonl");
  for (std::string line; std::getline(metrics, line);) {
    const json rec = json::parse(line);
    CHECK(rec.at("best_reward_raw").get<double>() >= last);
    last = rec.at("best_reward_raw").get<double>();
    CHECK(!rec.contains("wallclock_ms"));
  }

  const std::string first = slurp(a.run_dir / "metrics.jsonl");
  const std::string best_first = slurp(a.run_dir / "best_sequences.json");
  const std::string ckpt_first = slurp(a.run_dir / "checkpoint.json");
  const TrainOutcome b = cmd_train(cfg_path, log);
  CHECK(b.run_dir == a.run_dir);
  CHECK(slurp(b.run_dir / "metrics.jsonl") == first);
  CHECK(slurp(b.run_dir / "best_sequences.json") == best_first);
  CHECK(slurp(b.run_dir / "checkpoint.json") == ckpt_first);
  CHECK(log.str().find("already exists") != std::string::npos);

  const PolicyParameters p = load_checkpoint(a.run_dir / "checkpoint.json");
  CHECK(p.hidden() == 8);
  CHECK(p.shape().n_choices == 2);
}

TEST_CASE("replay and tamper detection") {
  const fs::path dir = scratch_dir("replay");
  const fs::path cfg_path = write_json(dir / "cfg.json", small_ising(dir / "runs"));
  std::ostringstream log;
  const TrainOutcome t = cmd_train(cfg_path, log);
  std::ostringstream out;
  const ReplayReport r = cmd_replay(t.run_dir, 0, out);
  CHECK(std::abs(r.replayed_reward - r.stored_reward) <= kReplayTolerance);
  CHECK(r.stored_reward == t.best_reward_raw);
  CHECK(out.str().find("matches") != std::string::npos);
  error_message([&] { cmd_replay(t.run_dir, 99, out); }, ErrorCode::kMissingArtifact);

  json snap = json::parse(slurp(t.run_dir / "config_snapshot.json"));
  snap["ising"]["delta_t"] = 0.04;
  snap["ising"]["total_time"] = 0.4;
  write_json(t.run_dir / "config_snapshot.json", snap);
  error_message([&] { cmd_replay(t.run_dir, 0, out); }, ErrorCode::kRewardMismatch);

  fs::remove(t.run_dir / "best_sequences.json");
  error_message([&] { cmd_replay(t.run_dir, 0, out); }, ErrorCode::kMissingArtifact);
  error_message([&] { cmd_replay(dir / "nowhere", 0, out); }, ErrorCode::kMissingArtifact);
}

TEST_CASE("oracle command") {
  const fs::path dir = scratch_dir("oracle");
  const fs::path cfg_path = write_json(dir / "cfg.json", small_ising(dir / "runs"));
  std::ostringstream out;
  const OracleOutcome o = cmd_oracle(cfg_path, OracleMode::kBrute, 0, out);
  CHECK(std::abs(o.result.best_reward - 0.331) <= 1e-3);
  CHECK(out.str().find("0.331") != std::string::npos);
  const ReplayReport r = cmd_replay(o.run_dir, 0, out);
  CHECK(r.replayed_reward == o.result.best_reward);

  std::ostringstream r1, r2;
  const OracleOutcome a = cmd_oracle(cfg_path, OracleMode::kRandom, 10, r1);
  const std::string file = slurp(a.run_dir / "oracle_result.json");
  const OracleOutcome b = cmd_oracle(cfg_path, OracleMode::kRandom, 10, r2);
  CHECK(slurp(b.run_dir / "oracle_result.json") == file);
  CHECK(r2.str().find(r1.str()) != std::string::npos);
  CHECK(a.result.best_reward <= o.result.best_reward);

  // With equal endpoints the optimum dominates both constant sequences.
  json same = small_ising(dir / "runs");
  same["ising"]["h_target"] = -2.0;
  const fs::path same_path = write_json(dir / "same.json", same);
  const OracleOutcome s = cmd_oracle(same_path, OracleMode::kBrute, 0, out);
  const auto env = make_environment(load_config(same_path));
  for (int c : {0, 1}) {
    CHECK(s.result.best_reward >= env->reward({std::vector<int>(10, c), {}}));
  }
  CHECK(s.result.best_reward > 0.99);

  json big = small_ising(dir / "runs");
  big["ising"]["total_time"] = 3.0;
  const fs::path big_path = write_json(dir / "big.json", big);
  error_message([&] { cmd_oracle(big_path, OracleMode::kBrute, 0, out); }, ErrorCode::kSpaceTooLarge);
}

TEST_CASE("plot export schema") {
  const fs::path dir = scratch_dir("export");
  json j = small_ising(dir / "runs");
  j["trainer"]["memory_size"] = 6;
  const fs::path cfg_path = write_json(dir / "cfg.json", j);
  std::ostringstream log;
  const TrainOutcome t = cmd_train(cfg_path, log);
  cmd_export_plots(t.run_dir);
  std::ifstream conv(t.run_dir / "convergence.csv");
  std::string header;
  std::getline(conv, header);
  CHECK(header == "iteration,best,mean,memory_avg,sigma,epsilon");
  int rows = 0;
  for (std::string line; std::getline(conv, line);) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
  }
  CHECK(rows == 10);
  CHECK(count_lines(t.run_dir / "sequences.csv") == 1 + 6);
  std::ifstream seqs(t.run_dir / "sequences.csv");
  std::getline(seqs, header);
  CHECK(header.rfind("rank,reward,t0,", 0) == 0);
  CHECK(std::count(header.begin(), header.end(), ',') == 1 + 10);

  fs::remove(t.run_dir / "metrics.jsonl");
  error_message([&] { cmd_export_plots(t.run_dir); }, ErrorCode::kMissingArtifact);
}

TEST_CASE("command-line exit codes") {
  const char* cli = std::getenv("MPPO_CLI");
  if (cli == nullptr) {
    MESSAGE("MPPO_CLI not set; skipping");
    return;
  }
  const fs::path dir = scratch_dir("cli");
  const auto run = [&](const std::string& args) {
    const std::string cmd = std::string(cli) + " " + args + " > " + (dir / "out.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const fs::path good = write_json(dir / "good.json", small_ising(dir / "runs"));
  CHECK(run("train " + good.string()) == 0);
  json bad = small_ising(dir / "runs");
  bad["ising"]["h_max"] = -1.0;
  const fs::path bad_path = write_json(dir / "bad.json", bad);
  CHECK(run("train " + bad_path.string()) == 2);
  const std::string msg = slurp(dir / "out.txt");
  CHECK(msg.rfind("error: ConfigInvalid:", 0) == 0);
  CHECK(msg.find("h_max") != std::string::npos);
  CHECK(std::count(msg.begin(), msg.end(), '\n') == 1);

  json big = small_ising(dir / "runs");
  big["ising"]["total_time"] = 3.0;
  const fs::path big_path = write_json(dir / "big.json", big);
  CHECK(run("oracle " + big_path.string() + " --mode brute") == 3);
  CHECK(slurp(dir / "out.txt").rfind("error: SpaceTooLarge:", 0) == 0);
  CHECK(run("replay " + (dir / "nowhere").string() + " --index 0") == 4);
  CHECK(run("export-plots " + (dir / "nowhere").string()) == 4);
  CHECK(run("oracle " + good.string() + " --mode sideways") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("oracle " + good.string() + " --mode random --n 10") == 0);
}

}  // TEST_SUITE
