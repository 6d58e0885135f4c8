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

#ifndef MPPO_ENVIRONMENT_HPP_
#define MPPO_ENVIRONMENT_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mppo {

// Layout of one control step as seen by the policy: a categorical choice plus
// `n_continuous` real values drawn from the chosen mixture component.
struct TaskShape {
  int n_choices = 4;
  int n_continuous = 0;
  // Divides each continuous value before it is fed back as network input.
  std::vector<double> value_scale;

  int input_width() const { return n_choices + n_continuous + 1; }
  bool discrete() const { return n_continuous == 0; }
  bool operator==(const TaskShape&) const = default;
};

// Policy-level representation of a control sequence. `raw` holds the
// unclamped continuous draws, step-major (steps * n_continuous values); the
// environment maps them onto its physical domain.
struct ControlSequence {
  std::vector<int> choices;
  std::vector<double> raw;

  int steps() const { return static_cast<int>(choices.size()); }
  bool operator==(const ControlSequence&) const = default;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual TaskShape shape() const = 0;
  virtual int steps() const = 0;
  // Raw reward in [0, 1]; higher is better.
  virtual double reward(const ControlSequence& seq) const = 0;
  // One draw from the uniform distribution over the task's action space.
  virtual ControlSequence random_sequence(std::mt19937_64& rng) const = 0;
  // Human-readable label of step t, used for sequence grids.
  virtual std::string describe_step(const ControlSequence& seq, int t) const = 0;
};

// Scores a batch, one OpenMP worker per block of sequences. The environment
// is shared read-only.
std::vector<double> score_batch(const Environment& env,
                                std::span<const ControlSequence> batch);

// Single-threaded reference for score_batch.
std::vector<double> score_batch_serial(const Environment& env,
                                       std::span<const ControlSequence> batch);

// Uniform bits -> double in [0, 1) with 53 bits of mantissa.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mppo

#endif  // MPPO_ENVIRONMENT_HPP_
