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

#ifndef MPPO_TRAINER_HPP_
#define MPPO_TRAINER_HPP_

// Memory proximal policy optimization. Each outer iteration samples a batch,
// merges it into a memory of the best sequences seen so far, and maximizes
// the sequence-level clipped surrogate over batch plus memory, with the
// advantage measured against the best reward seen so far.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "mppo/environment.hpp"
#include "mppo/policy.hpp"

namespace mppo {

enum class LossMode { kSequence, kPerStep };

// kAuto adapts sigma and epsilon only for tasks with continuous values.
enum class AdaptMode { kAuto, kOn, kOff };

// Baseline subtracted from each training item's reward. kBest uses the best
// reward seen so far, so every advantage is <= 0; kMean uses the mean reward of
// the current training set (batch plus memory).
enum class AdvantageBaseline { kMean, kBest };

struct TrainerConfig {
  int batch_size = 64;
  int memory_size = 1024;
  int inner_iters = 4;
  double epsilon_init = 0.2;
  double epsilon_min = 0.02;
  double epsilon_max = 0.9;
  double learning_rate = 1e-3;
  double sigma_init = 0.25;
  double sigma_min = 1e-3;
  int window_length = 10;
  double alpha_min = 0.5;
  double alpha_max = 2.0;
  int max_iterations = 500;
  LossMode loss_mode = LossMode::kSequence;
  AdaptMode adapt = AdaptMode::kAuto;
  AdvantageBaseline baseline = AdvantageBaseline::kMean;
  // Stop as soon as the best raw reward reaches this value.
  std::optional<double> target_reward;
  int shift_rollouts = 1000;
  // Rescale the surrogate gradient to at most this Euclidean norm before the
  // Adam step; 0 disables.
  double max_grad_norm = 1.0;

  void validate() const;
  bool operator==(const TrainerConfig&) const = default;
};

inline double advantage(double reward, double best_reward) {
  return reward - best_reward;
}

// min(r A, clip(r, 1 - eps, 1 + eps) A)
double clipped_objective(double ratio, double adv, double eps);
// Derivative of clipped_objective with respect to log r.
double clipped_objective_dlog(double ratio, double adv, double eps);

// Mean clipped objective from precomputed sequence log-probabilities.
double surrogate_loss(std::span<const double> logp, std::span<const double> logp_old,
                      std::span<const double> adv, double eps);
// Mean over (sequence, step) pairs of the per-step clipped objective, with
// the sequence advantage broadcast to every step. Columns are sequences.
double per_step_loss(const Eigen::MatrixXd& step_logp,
                     const Eigen::MatrixXd& step_logp_old,
                     std::span<const double> adv, double eps);

// Surrogate evaluated under `params` against each item's stored
// logprob_old / step_logprob_old.
double surrogate_loss(const PolicyParameters& params,
                      std::span<const SampledSequence> batch,
                      std::span<const double> adv, double eps);
double per_step_loss(const PolicyParameters& params,
                     std::span<const SampledSequence> batch,
                     std::span<const double> adv, double eps);

// Choices byte-exact, continuous values within 1e-12.
bool same_sequence(const ControlSequence& a, const ControlSequence& b);

// Best distinct sequences seen so far, sorted by descending raw reward. Ties
// keep the earlier-seen sequence first.
class MemoryBuffer {
 public:
  explicit MemoryBuffer(int capacity);

  void update(std::span<const SampledSequence> batch);

  const std::vector<SampledSequence>& entries() const { return entries_; }
  std::vector<SampledSequence>& mutable_entries() { return entries_; }
  int capacity() const { return capacity_; }
  bool contains(const ControlSequence& seq) const;
  std::optional<double> best_reward() const;
  // Sum of rewards over `capacity` slots, empty slots counting as zero, so the
  // value never decreases under update().
  double average_reward() const;

 private:
  void reindex();

  int capacity_;
  std::vector<SampledSequence> entries_;
  std::unordered_multimap<std::size_t, std::size_t> index_;
};

struct AdaptState {
  std::vector<double> memory_averages;
  std::vector<double> improvements;
  double last_alpha = 1.0;

  // Appends R(M_i) and, when the previous average exceeds 1e-12, the
  // relative improvement over it.
  void record(double memory_average);
};

// 1 + (older - newer) / older, or 1 when |older| < 1e-12.
double change_parameter(double older_mean, double newer_mean);

// alpha from the two most recent disjoint windows of `window` improvements,
// clipped to [alpha_min, alpha_max]. Returns 1 without a full 2*window history.
double adapt_parameters(AdaptState& state, int window, double alpha_min,
                        double alpha_max);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// One bias-corrected Adam step that ascends along `grad`.
void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& state, double lr);

struct RewardShift {
  double mean = 0.0;
  double stderr_ = 0.0;
};
// Mean raw reward of uniformly random sequences.
RewardShift estimate_reward_shift(const Environment& env, int n_rollouts,
                                  std::mt19937_64& rng);

struct RunRecord {
  int iteration = 0;
  double best_reward_raw = 0.0;   // best ever
  double batch_best_raw = 0.0;
  double mean_reward_raw = 0.0;   // batch mean
  double reward_shift = 0.0;
  double memory_avg = 0.0;
  double sigma = 0.0;
  double epsilon = 0.0;
  double alpha_last = 1.0;
  double surrogate = 0.0;
  double wallclock_ms = 0.0;
  ControlSequence best_sequence;

  double best_reward_shifted() const { return best_reward_raw - reward_shift; }
  double mean_reward_shifted() const { return mean_reward_raw - reward_shift; }
};

class MppoTrainer {
 public:
  MppoTrainer(const Environment& env, PolicyParameters init, TrainerConfig cfg,
              std::uint64_t run_seed);

  // One outer iteration. Throws NonFiniteLoss if the surrogate or its
  // gradient stops being finite.
  RunRecord iterate();

  // Iterates until max_iterations, the target reward, or `on_record`
  // returning false.
  std::vector<RunRecord> train(
      const std::function<bool(const RunRecord&)>& on_record = {});

  const PolicyParameters& params() const { return params_; }
  const MemoryBuffer& memory() const { return memory_; }
  const TrainerConfig& config() const { return cfg_; }
  const SampledSequence& best() const { return best_; }
  double epsilon() const { return epsilon_; }
  double reward_shift() const { return shift_.mean; }
  int iteration() const { return iteration_; }
  bool adapting() const;

 private:
  std::vector<std::mt19937_64> iteration_rngs() const;

  const Environment& env_;
  PolicyParameters params_;
  TrainerConfig cfg_;
  std::uint64_t run_seed_;
  MemoryBuffer memory_;
  AdaptState adapt_;
  AdamState adam_;
  SampledSequence best_;
  bool have_best_ = false;
  double epsilon_;
  RewardShift shift_;
  int iteration_ = 0;
};

}  // namespace mppo

#endif  // MPPO_TRAINER_HPP_
