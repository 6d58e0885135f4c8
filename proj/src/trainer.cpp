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

#include "mppo/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "mppo/error.hpp"

namespace mppo {
namespace {

constexpr double kDedupTolerance = 1e-12;
constexpr double kImprovementGuard = 1e-12;

std::size_t choices_hash(const ControlSequence& s) {
  std::size_t h = 1469598103934665603ull;
  for (int c : s.choices) {
    h ^= static_cast<std::size_t>(c) + 0x9e3779b97f4a7c15ull;
    h *= 1099511628211ull;
  }
  return h;
}

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void TrainerConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kConfigInvalid, "trainer." + field + ": " + why);
  };
  if (batch_size < 1) fail("batch_size", "must be positive");
  if (memory_size < 0) fail("memory_size", "must be non-negative");
  if (inner_iters < 1) fail("inner_iters", "must be positive");
  if (!(epsilon_init > 0.0 && epsilon_init < 1.0)) {
    fail("epsilon_init", "must lie in (0, 1)");
  }
  if (!(epsilon_min > 0.0 && epsilon_min <= epsilon_init)) {
    fail("epsilon_min", "must lie in (0, epsilon_init]");
  }
  if (!(epsilon_max >= epsilon_init && epsilon_max < 1.0)) {
    fail("epsilon_max", "must lie in [epsilon_init, 1)");
  }
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
  if (!(sigma_init > 0.0)) fail("sigma_init", "must be positive");
  if (!(sigma_min > 0.0 && sigma_min <= sigma_init)) {
    fail("sigma_min", "must lie in (0, sigma_init]");
  }
  if (window_length < 1) fail("window_length", "must be positive");
  if (!(alpha_min > 0.0 && alpha_min < 1.0)) fail("alpha_min", "must lie in (0, 1)");
  if (!(alpha_max > 1.0)) fail("alpha_max", "must exceed 1");
  if (max_iterations < 1) fail("max_iterations", "must be positive");
  if (shift_rollouts < 1) fail("shift_rollouts", "must be positive");
  if (!(max_grad_norm >= 0.0)) fail("max_grad_norm", "must be non-negative");
}

double clipped_objective(double ratio, double adv, double eps) {
  return std::min(ratio * adv, clip(ratio, 1.0 - eps, 1.0 + eps) * adv);
}

double clipped_objective_dlog(double ratio, double adv, double eps) {
  const double unclipped = ratio * adv;
  const double clipped = clip(ratio, 1.0 - eps, 1.0 + eps) * adv;
  // The clipped branch is constant in the parameters.
  if (unclipped <= clipped) return unclipped;
  return 0.0;
}

double surrogate_loss(std::span<const double> logp, std::span<const double> logp_old,
                      std::span<const double> adv, double eps) {
  if (logp.size() != logp_old.size() || logp.size() != adv.size() || logp.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "surrogate_loss: size mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) {
    total += clipped_objective(std::exp(logp[i] - logp_old[i]), adv[i], eps);
  }
  return total / static_cast<double>(logp.size());
}

double per_step_loss(const Eigen::MatrixXd& step_logp,
                     const Eigen::MatrixXd& step_logp_old,
                     std::span<const double> adv, double eps) {
  if (step_logp.rows() != step_logp_old.rows() ||
      step_logp.cols() != step_logp_old.cols() ||
      static_cast<std::size_t>(step_logp.cols()) != adv.size() ||
      step_logp.size() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "per_step_loss: size mismatch");
  }
  double total = 0.0;
  for (Eigen::Index n = 0; n < step_logp.cols(); ++n) {
    for (Eigen::Index t = 0; t < step_logp.rows(); ++t) {
      total += clipped_objective(std::exp(step_logp(t, n) - step_logp_old(t, n)),
                                 adv[static_cast<std::size_t>(n)], eps);
    }
  }
  return total / static_cast<double>(step_logp.size());
}

namespace {

std::vector<ControlSequence> sequences_of(std::span<const SampledSequence> batch) {
  std::vector<ControlSequence> seqs;
  seqs.reserve(batch.size());
  for (const auto& s : batch) seqs.push_back(s.seq);
  return seqs;
}

}  // namespace

double surrogate_loss(const PolicyParameters& params,
                      std::span<const SampledSequence> batch,
                      std::span<const double> adv, double eps) {
  const auto seqs = sequences_of(batch);
  const Eigen::MatrixXd steps = batch_step_log_probs(params, seqs);
  std::vector<double> logp(batch.size()), old(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    logp[i] = steps.col(static_cast<Eigen::Index>(i)).sum();
    old[i] = batch[i].logprob_old;
  }
  return surrogate_loss(logp, old, adv, eps);
}

double per_step_loss(const PolicyParameters& params,
                     std::span<const SampledSequence> batch,
                     std::span<const double> adv, double eps) {
  const auto seqs = sequences_of(batch);
  const Eigen::MatrixXd steps = batch_step_log_probs(params, seqs);
  Eigen::MatrixXd old(steps.rows(), steps.cols());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (static_cast<Eigen::Index>(batch[i].step_logprob_old.size()) != steps.rows()) {
      throw Error(ErrorCode::kShapeMismatch, "per_step_loss: missing step log-probs");
    }
    old.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(batch[i].step_logprob_old.data(), steps.rows());
  }
  return per_step_loss(steps, old, adv, eps);
}

bool same_sequence(const ControlSequence& a, const ControlSequence& b) {
  if (a.choices != b.choices || a.raw.size() != b.raw.size()) return false;
  for (std::size_t i = 0; i < a.raw.size(); ++i) {
    if (std::abs(a.raw[i] - b.raw[i]) > kDedupTolerance) return false;
  }
  return true;
}

MemoryBuffer::MemoryBuffer(int capacity) : capacity_(std::max(0, capacity)) {}

bool MemoryBuffer::contains(const ControlSequence& seq) const {
  const auto [lo, hi] = index_.equal_range(choices_hash(seq));
  for (auto it = lo; it != hi; ++it) {
    if (same_sequence(entries_[it->second].seq, seq)) return true;
  }
  return false;
}

void MemoryBuffer::update(std::span<const SampledSequence> batch) {
  if (capacity_ == 0) return;
  for (const auto& s : batch) {
    if (contains(s.seq)) continue;
    index_.emplace(choices_hash(s.seq), entries_.size());
    entries_.push_back(s);
  }
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const SampledSequence& a, const SampledSequence& b) {
                     return a.reward_raw > b.reward_raw;
                   });
  if (entries_.size() > static_cast<std::size_t>(capacity_)) {
    entries_.resize(static_cast<std::size_t>(capacity_));
  }
  reindex();
}

void MemoryBuffer::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    index_.emplace(choices_hash(entries_[i].seq), i);
  }
}

std::optional<double> MemoryBuffer::best_reward() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.front().reward_raw;
}

double MemoryBuffer::average_reward() const {
  if (capacity_ == 0) return 0.0;
  double total = 0.0;
  for (const auto& e : entries_) total += e.reward_raw;
  return total / static_cast<double>(capacity_);
}

void AdaptState::record(double memory_average) {
  if (!memory_averages.empty() && memory_averages.back() > kImprovementGuard) {
    improvements.push_back((memory_average - memory_averages.back()) /
                           memory_averages.back());
  }
  memory_averages.push_back(memory_average);
}

double change_parameter(double older_mean, double newer_mean) {
  if (std::abs(older_mean) < kImprovementGuard) return 1.0;
  return 1.0 + (older_mean - newer_mean) / older_mean;
}

double adapt_parameters(AdaptState& state, int window, double alpha_min,
                        double alpha_max) {
  const auto l = static_cast<std::size_t>(window);
  const std::size_t n = state.improvements.size();
  double alpha = 1.0;
  if (n >= 2 * l) {
    const auto first = state.improvements.begin() + static_cast<std::ptrdiff_t>(n - 2 * l);
    const auto mid = first + static_cast<std::ptrdiff_t>(l);
    const double older = std::accumulate(first, mid, 0.0) / double(l);
    const double newer = std::accumulate(mid, state.improvements.end(), 0.0) / double(l);
    alpha = clip(change_parameter(older, newer), alpha_min, alpha_max);
  }
  state.last_alpha = alpha;
  return alpha;
}

void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& state, double lr) {
  if (params.size() != grad.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam_step: gradient size mismatch");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam_step: moment size mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, double(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] += lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
  }
}

RewardShift estimate_reward_shift(const Environment& env, int n_rollouts,
                                  std::mt19937_64& rng) {
  std::vector<ControlSequence> seqs;
  seqs.reserve(static_cast<std::size_t>(n_rollouts));
  for (int i = 0; i < n_rollouts; ++i) seqs.push_back(env.random_sequence(rng));
  const std::vector<double> r = score_batch(env, seqs);
  const double n = static_cast<double>(r.size());
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  var = r.size() > 1 ? var / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

MppoTrainer::MppoTrainer(const Environment& env, PolicyParameters init,
                         TrainerConfig cfg, std::uint64_t run_seed)
    : env_(env),
      params_(std::move(init)),
      cfg_(cfg),
      run_seed_(run_seed),
      memory_(cfg.memory_size),
      epsilon_(cfg.epsilon_init) {
  cfg_.validate();
  if (!(params_.shape() == env_.shape())) {
    throw Error(ErrorCode::kShapeMismatch, "trainer: policy and task disagree");
  }
  if (env_.steps() < 1) {
    throw Error(ErrorCode::kConfigInvalid, "trainer: environment has no steps");
  }
  params_.sigma = cfg_.sigma_init;
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed_),
                    static_cast<std::uint32_t>(run_seed_ >> 32), 0x5eed5u};
  std::mt19937_64 rng(seq);
  shift_ = estimate_reward_shift(env_, cfg_.shift_rollouts, rng);
}

bool MppoTrainer::adapting() const {
  switch (cfg_.adapt) {
    case AdaptMode::kOn:
      return true;
    case AdaptMode::kOff:
      return false;
    case AdaptMode::kAuto:
      return !env_.shape().discrete();
  }
  return false;
}

std::vector<std::mt19937_64> MppoTrainer::iteration_rngs() const {
  std::vector<std::mt19937_64> rngs;
  rngs.reserve(static_cast<std::size_t>(cfg_.batch_size));
  for (int j = 0; j < cfg_.batch_size; ++j) {
    std::seed_seq seq{static_cast<std::uint32_t>(run_seed_),
                      static_cast<std::uint32_t>(run_seed_ >> 32),
                      static_cast<std::uint32_t>(iteration_),
                      static_cast<std::uint32_t>(j)};
    rngs.emplace_back(seq);
  }
  return rngs;
}

RunRecord MppoTrainer::iterate() {
  const auto start = std::chrono::steady_clock::now();
  ++iteration_;

  auto rngs = iteration_rngs();
  std::vector<SampledSequence> batch = sample_batch(params_, env_.steps(), rngs);
  {
    std::vector<ControlSequence> seqs;
    seqs.reserve(batch.size());
    for (const auto& s : batch) seqs.push_back(s.seq);
    const std::vector<double> rewards = score_batch(env_, seqs);
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i].reward_raw = rewards[i];
  }

  RunRecord rec;
  rec.iteration = iteration_;
  double batch_best = batch.front().reward_raw;
  std::size_t batch_best_idx = 0;
  double batch_sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch_sum += batch[i].reward_raw;
    if (batch[i].reward_raw > batch_best) {
      batch_best = batch[i].reward_raw;
      batch_best_idx = i;
    }
  }
  if (!have_best_ || batch_best > best_.reward_raw) {
    best_ = batch[batch_best_idx];
    have_best_ = true;
  }

  memory_.update(batch);
  const double best_reward =
      std::max(batch_best, memory_.best_reward().value_or(batch_best));

  // Training set: the fresh batch plus every memory entry it does not repeat.
  std::vector<const SampledSequence*> items;
  items.reserve(batch.size() + memory_.entries().size());
  std::vector<SampledSequence*> memory_items;
  {
    MemoryBuffer batch_index(static_cast<int>(batch.size()));
    batch_index.update(batch);
    for (const auto& s : batch) items.push_back(&s);
    for (auto& e : memory_.mutable_entries()) {
      if (!batch_index.contains(e.seq)) {
        items.push_back(&e);
        memory_items.push_back(&e);
      }
    }
  }
  const std::size_t n_items = items.size();
  std::vector<ControlSequence> seqs;
  seqs.reserve(n_items);
  double baseline = best_reward;
  if (cfg_.baseline == AdvantageBaseline::kMean) {
    baseline = batch_sum / double(batch.size());
  }
  std::vector<double> adv(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    seqs.push_back(items[i]->seq);
    adv[i] = advantage(items[i]->reward_raw, baseline);
  }

  const auto steps = static_cast<std::size_t>(env_.steps());
  // Log-probabilities under the snapshot, filled on the first inner pass
  // where the parameters still equal the snapshot.
  std::vector<double> old_seq(n_items, 0.0);
  std::vector<double> old_step(n_items * steps, 0.0);
  std::vector<double> grad(params_.size());
  const double eps = epsilon_;
  const bool per_step = cfg_.loss_mode == LossMode::kPerStep;
  const double norm = per_step ? 1.0 / double(n_items * steps) : 1.0 / double(n_items);

  double surrogate = 0.0;
  for (int k = 0; k < cfg_.inner_iters; ++k) {
    const bool snapshot = k == 0;
    const ItemLoss loss = [&](std::size_t n, std::span<const double> logp,
                              std::span<double> dstep) {
      const double a = adv[n];
      if (per_step) {
        double total = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
          double& old = old_step[n * steps + t];
          if (snapshot) old = logp[t];
          const double r = std::exp(logp[t] - old);
          total += clipped_objective(r, a, eps);
          dstep[t] = norm * clipped_objective_dlog(r, a, eps);
        }
        return norm * total;
      }
      const double lp = std::accumulate(logp.begin(), logp.end(), 0.0);
      if (snapshot) old_seq[n] = lp;
      const double r = std::exp(lp - old_seq[n]);
      const double d = norm * clipped_objective_dlog(r, a, eps);
      std::fill(dstep.begin(), dstep.end(), d);
      return norm * clipped_objective(r, a, eps);
    };
    surrogate = loss_and_gradient(params_, seqs, loss, grad);
    if (!std::isfinite(surrogate) || !all_finite(grad)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "iteration " + std::to_string(iteration_) + " inner step " +
                      std::to_string(k) + ": surrogate or gradient is not finite");
    }
    if (snapshot) {
      // Memory entries carry their log-probability under this iteration's
      // snapshot parameters.
      for (std::size_t i = batch.size(); i < n_items; ++i) {
        SampledSequence* e = memory_items[i - batch.size()];
        e->logprob_old = per_step ? 0.0 : old_seq[i];
        if (per_step) {
          e->step_logprob_old.assign(old_step.begin() + static_cast<std::ptrdiff_t>(i * steps),
                                     old_step.begin() + static_cast<std::ptrdiff_t>((i + 1) * steps));
          for (double v : e->step_logprob_old) e->logprob_old += v;
        }
      }
    }
    if (cfg_.max_grad_norm > 0.0) {
      double sq = 0.0;
      for (double g : grad) sq += g * g;
      const double gnorm = std::sqrt(sq);
      if (gnorm > cfg_.max_grad_norm) {
        const double scale = cfg_.max_grad_norm / gnorm;
        for (double& g : grad) g *= scale;
      }
    }
    adam_step(params_.values(), grad, adam_, cfg_.learning_rate);
  }

  const double mem_avg = memory_.average_reward();
  adapt_.record(mem_avg);
  double alpha = adapt_.last_alpha;
  if (adapting() && iteration_ % cfg_.window_length == 0) {
    alpha = adapt_parameters(adapt_, cfg_.window_length, cfg_.alpha_min, cfg_.alpha_max);
    params_.sigma = std::max(params_.sigma * alpha, cfg_.sigma_min);
    epsilon_ = std::clamp(epsilon_ * alpha, cfg_.epsilon_min, cfg_.epsilon_max);
  }

  rec.best_reward_raw = best_.reward_raw;
  rec.batch_best_raw = batch_best;
  rec.mean_reward_raw = batch_sum / double(batch.size());
  rec.reward_shift = shift_.mean;
  rec.memory_avg = mem_avg;
  rec.sigma = params_.sigma;
  rec.epsilon = epsilon_;
  rec.alpha_last = alpha;
  rec.surrogate = surrogate;
  rec.best_sequence = best_.seq;
  rec.wallclock_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return rec;
}

std::vector<RunRecord> MppoTrainer::train(
    const std::function<bool(const RunRecord&)>& on_record) {
  std::vector<RunRecord> records;
  while (iteration_ < cfg_.max_iterations) {
    records.push_back(iterate());
    const RunRecord& r = records.back();
    if (on_record && !on_record(r)) break;
    if (cfg_.target_reward && r.best_reward_raw >= *cfg_.target_reward) break;
  }
  return records;
}

}  // namespace mppo
