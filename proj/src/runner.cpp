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

#include "mppo/runner.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mppo/checkpoint.hpp"
#include "mppo/error.hpp"

namespace mppo {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kTopSequences = 10;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingArtifact, "missing " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kIoError, path.string() + ": " + e.what());
  }
}

fs::path make_run_dir(const ExperimentConfig& cfg, std::string_view salt,
                      std::ostream& log) {
  const fs::path dir = output_root(cfg) / run_id(cfg, salt);
  std::error_code ec;
  if (fs::exists(dir / "config_snapshot.json", ec)) {
    log << "note: run " << dir.filename().string()
        << " already exists; overwriting its artifacts\n";
  }
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

json labelled_sequence(const Environment& env, const ControlSequence& seq) {
  json j = sequence_to_json(seq);
  json actions = json::array();
  for (int t = 0; t < seq.steps(); ++t) actions.push_back(env.describe_step(seq, t));
  j["actions"] = std::move(actions);
  return j;
}

json ranked_entry(const Environment& env, int rank, const SampledSequence& s,
                  double shift) {
  json j = labelled_sequence(env, s.seq);
  j["rank"] = rank;
  j["reward_raw"] = s.reward_raw;
  j["reward_shifted"] = s.reward_raw - shift;
  return j;
}

json record_json(const RunRecord& r) {
  return {{"iteration", r.iteration},
          {"best_reward_raw", r.best_reward_raw},
          {"best_reward_shifted", r.best_reward_shifted()},
          {"batch_best_raw", r.batch_best_raw},
          {"mean_reward_raw", r.mean_reward_raw},
          {"mean_reward_shifted", r.mean_reward_shifted()},
          {"reward_shift", r.reward_shift},
          {"memory_avg", r.memory_avg},
          {"sigma", r.sigma},
          {"epsilon", r.epsilon},
          {"alpha_last", r.alpha_last},
          {"surrogate", r.surrogate},
          {"best_sequence", sequence_to_json(r.best_sequence)}};
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string run_id(const ExperimentConfig& cfg, std::string_view salt) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  mix(canonical_dump(cfg));
  mix(salt);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

fs::path output_root(const ExperimentConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
  return "runs";
}

double headline_metric(Scenario scenario, double reward_raw) {
  return scenario == Scenario::kQuantumMemory ? 1.0 - reward_raw : reward_raw;
}

const char* headline_name(Scenario scenario) {
  return scenario == Scenario::kQuantumMemory ? "D" : "S2";
}

json sequence_to_json(const ControlSequence& seq) {
  return {{"choices", seq.choices}, {"raw", seq.raw}};
}

ControlSequence sequence_from_json(const json& j) {
  ControlSequence seq;
  seq.choices = j.at("choices").get<std::vector<int>>();
  seq.raw = j.at("raw").get<std::vector<double>>();
  return seq;
}

TrainOutcome run_training(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto env = make_environment(cfg);
  const fs::path dir = make_run_dir(cfg, "train", log);
  write_text(dir / "config_snapshot.json", canonical_dump(cfg));

  PolicyParameters init = init_parameters(env->shape(), cfg.policy.hidden, cfg.run_seed,
                                          cfg.trainer.sigma_init, cfg.policy.forget_bias);
  init.density = cfg.policy.density;
  MppoTrainer trainer(*env, std::move(init), cfg.trainer, cfg.run_seed);

  std::ofstream metrics(dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream timing(dir / "timing.jsonl", std::ios::binary | std::ios::trunc);
  if (!metrics || !timing) throw Error(ErrorCode::kIoError, "cannot write metrics in " + dir.string());

  const char* metric = headline_name(cfg.scenario);
  int iterations = 0;
  try {
    trainer.train([&](const RunRecord& r) {
      metrics << record_json(r).dump() << '\n';
      timing << json{{"iteration", r.iteration}, {"wallclock_ms", r.wallclock_ms}}.dump()
             << '\n';
      iterations = r.iteration;
      if (r.iteration == 1 || r.iteration % 10 == 0) {
        char line[160];
        std::snprintf(line, sizeof line,
                      "iter %5d  best %.6f  mean %.6f  %s %.6g  sigma %.4g  eps %.4g\n",
                      r.iteration, r.best_reward_raw, r.mean_reward_raw, metric,
                      headline_metric(cfg.scenario, r.best_reward_raw), r.sigma, r.epsilon);
        log << line << std::flush;
      }
      return static_cast<bool>(metrics);
    });
  } catch (const Error& e) {
    metrics << json{{"iteration", trainer.iteration()},
                    {"error", std::string(error_code_name(e.code()))},
                    {"message", e.what()}}.dump()
            << '\n';
    throw;
  }
  if (!metrics) throw Error(ErrorCode::kIoError, "failed writing metrics.jsonl");

  const double shift = trainer.reward_shift();
  json entries = json::array();
  const auto& mem = trainer.memory().entries();
  for (int i = 0; i < std::min<int>(kTopSequences, static_cast<int>(mem.size())); ++i) {
    entries.push_back(ranked_entry(*env, i, mem[i], shift));
  }
  const SampledSequence& best = trainer.best();
  json best_sequences = {{"entries", std::move(entries)},
                         {"best_ever", ranked_entry(*env, 0, best, shift)},
                         {"reward_shift", shift}};
  write_text(dir / "best_sequences.json", best_sequences.dump(2) + "\n");
  save_checkpoint(dir / "checkpoint.json", trainer.params());

  TrainOutcome outcome{dir, iterations, best.reward_raw,
                       headline_metric(cfg.scenario, best.reward_raw)};
  const bool hit_target =
      cfg.trainer.target_reward && best.reward_raw >= *cfg.trainer.target_reward;
  json summary = {{"run_id", dir.filename().string()},
                  {"scenario", to_string(cfg.scenario)},
                  {"task", to_string(cfg.task)},
                  {"iterations", iterations},
                  {"stopped_by", hit_target ? "target_reward" : "max_iterations"},
                  {"best_reward_raw", best.reward_raw},
                  {"best_reward_shifted", best.reward_raw - shift},
                  {"reward_shift", shift},
                  {"headline_metric", metric},
                  {"headline_value", outcome.headline},
                  {"best_sequence", labelled_sequence(*env, best.seq)}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  log << "run " << dir.string() << ": " << metric << " = " << fmt_double(outcome.headline)
      << '\n';
  return outcome;
}

TrainOutcome cmd_train(const fs::path& config_path, std::ostream& log) {
  return run_training(load_config(config_path), log);
}

OracleOutcome run_oracle(const ExperimentConfig& cfg, OracleMode mode, std::uint64_t n,
                         std::ostream& out) {
  cfg.validate();
  const auto env = make_environment(cfg);
  if (mode == OracleMode::kBrute && !env->shape().discrete()) {
    throw Error(ErrorCode::kConfigInvalid,
                "task: brute-force mode requires a discrete task, got " + to_string(cfg.task));
  }
  const std::string salt =
      mode == OracleMode::kBrute ? "oracle:brute" : "oracle:random:" + std::to_string(n);

  OracleResult result;
  if (mode == OracleMode::kBrute) {
    result = brute_force(*env);
  } else {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.run_seed),
                      static_cast<std::uint32_t>(cfg.run_seed >> 32), 0x0c1eu};
    std::mt19937_64 rng(seq);
    result = random_search(*env, n, rng);
  }

  const fs::path dir = make_run_dir(cfg, salt, out);
  write_text(dir / "config_snapshot.json", canonical_dump(cfg));
  json labelled = labelled_sequence(*env, result.best_sequence);
  json file = {{"mode", mode == OracleMode::kBrute ? "brute" : "random"},
               {"n", mode == OracleMode::kBrute ? json(nullptr) : json(n)},
               {"best_reward", result.best_reward},
               {"headline_metric", headline_name(cfg.scenario)},
               {"headline_value", headline_metric(cfg.scenario, result.best_reward)},
               {"evaluated_count", result.evaluated_count},
               {"exhaustive", result.exhaustive},
               {"best_sequence", labelled}};
  write_text(dir / "oracle_result.json", file.dump(2) + "\n");

  json entry = labelled;
  entry["rank"] = 0;
  entry["reward_raw"] = result.best_reward;
  entry["reward_shifted"] = result.best_reward;
  json best_sequences = {{"entries", json::array({entry})},
                         {"best_ever", entry},
                         {"reward_shift", 0.0}};
  write_text(dir / "best_sequences.json", best_sequences.dump(2) + "\n");

  char line[64];
  std::snprintf(line, sizeof line, "%.6f\n", result.best_reward);
  out << line;
  return {dir, std::move(result)};
}

OracleOutcome cmd_oracle(const fs::path& config_path, OracleMode mode, std::uint64_t n,
                         std::ostream& out) {
  return run_oracle(load_config(config_path), mode, n, out);
}

ReplayReport cmd_replay(const fs::path& run_dir, int index, std::ostream& out) {
  const json snapshot = read_json(run_dir / "config_snapshot.json");
  const json stored = read_json(run_dir / "best_sequences.json");
  const ExperimentConfig cfg = parse_config(snapshot);

  const json& entries = stored.at("entries");
  if (index < 0 || static_cast<std::size_t>(index) >= entries.size()) {
    throw Error(ErrorCode::kMissingArtifact,
                "best_sequences.json has " + std::to_string(entries.size()) +
                    " entries; index " + std::to_string(index) + " is out of range");
  }
  const json& entry = entries[static_cast<std::size_t>(index)];
  ReplayReport report;
  report.index = index;
  report.stored_reward = entry.at("reward_raw").get<double>();

  const auto env = make_environment(cfg);
  try {
    report.replayed_reward = env->reward(sequence_from_json(entry));
  } catch (const Error& e) {
    throw Error(ErrorCode::kRewardMismatch,
                "stored sequence no longer evaluates: " + std::string(e.what()));
  }
  if (!(std::abs(report.replayed_reward - report.stored_reward) <= kReplayTolerance)) {
    throw Error(ErrorCode::kRewardMismatch,
                "entry " + std::to_string(index) + ": stored " +
                    fmt_double(report.stored_reward) + ", replayed " +
                    fmt_double(report.replayed_reward));
  }
  char line[128];
  std::snprintf(line, sizeof line, "entry %d: reward %.12f matches (|diff| = %.3g)\n", index,
                report.replayed_reward, std::abs(report.replayed_reward - report.stored_reward));
  out << line;
  return report;
}

void cmd_export_plots(const fs::path& run_dir) {
  std::ifstream metrics(run_dir / "metrics.jsonl");
  if (!metrics) {
    throw Error(ErrorCode::kMissingArtifact, "missing " + (run_dir / "metrics.jsonl").string());
  }
  std::ostringstream conv;
  conv << "iteration,best,mean,memory_avg,sigma,epsilon\n";
  std::string line;
  while (std::getline(metrics, line)) {
    if (line.empty()) continue;
    const json r = json::parse(line);
    if (r.contains("error")) continue;
    conv << r.at("iteration").get<int>() << ',' << fmt_double(r.at("best_reward_raw")) << ','
         << fmt_double(r.at("mean_reward_raw")) << ',' << fmt_double(r.at("memory_avg"))
         << ',' << fmt_double(r.at("sigma")) << ',' << fmt_double(r.at("epsilon")) << '\n';
  }
  write_text(run_dir / "convergence.csv", conv.str());

  const json stored = read_json(run_dir / "best_sequences.json");
  const json& entries = stored.at("entries");
  std::size_t steps = 0;
  for (const json& e : entries) steps = std::max(steps, e.at("actions").size());
  std::ostringstream seqs;
  seqs << "rank,reward";
  for (std::size_t t = 0; t < steps; ++t) seqs << ",t" << t;
  seqs << '\n';
  for (const json& e : entries) {
    seqs << e.at("rank").get<int>() << ',' << fmt_double(e.at("reward_raw"));
    for (const json& a : e.at("actions")) seqs << ',' << csv_cell(a.get<std::string>());
    seqs << '\n';
  }
  write_text(run_dir / "sequences.csv", seqs.str());
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid:
      return 2;
    case ErrorCode::kSpaceTooLarge:
      return 3;
    case ErrorCode::kMissingArtifact:
    case ErrorCode::kRewardMismatch:
    case ErrorCode::kIoError:
      return 4;
    default:
      return 1;
  }
}

}  // namespace mppo
