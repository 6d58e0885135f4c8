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

#ifndef MPPO_POLICY_HPP_
#define MPPO_POLICY_HPP_

// Autoregressive sequence policy: a two-layer LSTM whose top hidden state
// feeds a softmax over the discrete choices and one linear mean head per
// (choice, continuous value). All continuous draws share one scalar sigma.
//
// Step input: one-hot of the previous choice, previous continuous values
// divided by TaskShape::value_scale and clamped to [-1, 1], and a start flag
// that is 1 only at t = 0 (where every other entry is 0).

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mppo/environment.hpp"

namespace mppo {

// How a step with continuous values is scored. kJoint uses
// log p_c + log N(x | mu_c, sigma^2 I) for the sampled component c; kMarginal
// uses the full mixture log sum_i p_i N(x | mu_i, sigma^2 I). Discrete steps
// always use the categorical mass.
enum class MixtureDensity { kJoint, kMarginal };

enum class Tensor : int {
  kInput0 = 0,   // 4H x input_width
  kRecur0,       // 4H x H
  kBias0,        // 4H x 1
  kInput1,       // 4H x H
  kRecur1,       // 4H x H
  kBias1,        // 4H x 1
  kSoftmaxW,     // n_choices x H
  kSoftmaxB,     // n_choices x 1
  kMeanW,        // n_choices*n_continuous x H, row = choice*n_continuous + k
  kMeanB,        // n_choices*n_continuous x 1
  kCount
};

struct TensorSpec {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
};

// Eigen reductions over mapped memory choose their vector start from the
// address, so parameter and gradient storage keep a fixed alignment to make
// results reproducible bit for bit.
using AlignedBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

// Gate blocks inside the LSTM tensors are ordered input, forget, cell, output.
// Tensors are stored column-major inside one flat buffer.
class PolicyParameters {
 public:
  PolicyParameters() = default;
  PolicyParameters(TaskShape shape, int hidden);

  const TaskShape& shape() const { return shape_; }
  int hidden() const { return hidden_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  const std::vector<TensorSpec>& tensors() const { return specs_; }
  const TensorSpec& spec(Tensor t) const {
    return specs_[static_cast<std::size_t>(t)];
  }
  Eigen::Map<Eigen::MatrixXd> tensor(Tensor t);
  Eigen::Map<const Eigen::MatrixXd> tensor(Tensor t) const;

  double sigma = 0.25;
  MixtureDensity density = MixtureDensity::kJoint;

  bool operator==(const PolicyParameters& o) const {
    return shape_ == o.shape_ && hidden_ == o.hidden_ &&
           values_ == o.values_ && sigma == o.sigma && density == o.density;
  }

 private:
  TaskShape shape_;
  int hidden_ = 0;
  std::vector<TensorSpec> specs_;
  AlignedBuffer values_;
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; forget-gate biases set
// to `forget_bias`.
PolicyParameters init_parameters(const TaskShape& shape, int hidden,
                                 std::uint64_t seed, double sigma,
                                 double forget_bias = 1.0);

Eigen::MatrixXd encode_inputs(const TaskShape& shape, const ControlSequence& seq);

struct StepOutput {
  Eigen::VectorXd probs;   // n_choices
  Eigen::MatrixXd means;   // n_choices x n_continuous
};

// Runs the network on explicit inputs (input_width x T).
std::vector<StepOutput> forward(const PolicyParameters& params,
                                const Eigen::MatrixXd& inputs);

// log p(c_t | c_<t) of one step given its head outputs. When `gamma` is
// non-null it receives the per-choice posterior weights used by the backward
// pass (one-hot of the choice for kJoint and for discrete steps).
double step_log_prob(std::span<const double> log_probs,
                     std::span<const double> means, int n_continuous,
                     double sigma, int choice, std::span<const double> values,
                     MixtureDensity density, double* gamma = nullptr);

double log_prob(const PolicyParameters& params, const ControlSequence& seq);

// T x N matrix of per-step log-probabilities, computed in blocks of
// `kBlockSize` sequences spread over OpenMP workers.
Eigen::MatrixXd batch_step_log_probs(const PolicyParameters& params,
                                     std::span<const ControlSequence> batch);

// Separable loss: the sum over items of f_n(step log-probs of item n). The
// callback fills d f_n / d logp_{n,t} into `dstep` and returns f_n. It may be
// invoked concurrently for different items.
using ItemLoss = std::function<double(std::size_t item,
                                      std::span<const double> step_logp,
                                      std::span<double> dstep)>;

// Returns the total loss and writes its gradient (same layout as the
// parameters) into `grad`.
double loss_and_gradient(const PolicyParameters& params,
                         std::span<const ControlSequence> batch,
                         const ItemLoss& loss, std::span<double> grad);

struct SampledSequence {
  ControlSequence seq;
  double logprob_old = 0.0;
  std::vector<double> step_logprob_old;
  double reward_raw = 0.0;
};

// Draws one sequence per entry of `rngs`, advancing all of them in lockstep.
std::vector<SampledSequence> sample_batch(const PolicyParameters& params,
                                          int steps,
                                          std::span<std::mt19937_64> rngs);

SampledSequence sample_sequence(const PolicyParameters& params, int steps,
                                std::mt19937_64& rng);

inline constexpr int kBlockSize = 64;

namespace reference {

// Plain-loop, one-sequence-at-a-time evaluation of the same network. Kept as
// the cross-check and benchmark baseline for the blocked kernels.
std::vector<double> step_log_probs(const PolicyParameters& params,
                                   const ControlSequence& seq);

}  // namespace reference

}  // namespace mppo

#endif  // MPPO_POLICY_HPP_
