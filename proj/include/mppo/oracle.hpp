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

#ifndef MPPO_ORACLE_HPP_
#define MPPO_ORACLE_HPP_

#include <cstdint>
#include <random>

#include "mppo/environment.hpp"

namespace mppo {

struct OracleResult {
  ControlSequence best_sequence;
  double best_reward = 0.0;
  std::uint64_t evaluated_count = 0;
  bool exhaustive = false;
};

inline constexpr std::uint64_t kDefaultOracleCap = std::uint64_t{1} << 22;

// Mixed-radix index -> sequence, last step least significant.
ControlSequence sequence_from_index(std::uint64_t index, int n_choices, int steps);

// Exact maximum over every discrete sequence of a discrete task. Ties resolve
// to the lexicographically smallest sequence. Throws SpaceTooLarge when
// n_choices^steps exceeds `cap`, ShapeMismatch for continuous tasks.
OracleResult brute_force(const Environment& env,
                         std::uint64_t cap = kDefaultOracleCap);

// Single-threaded reference for brute_force.
OracleResult brute_force_serial(const Environment& env,
                                std::uint64_t cap = kDefaultOracleCap);

// Best of `n` uniform draws from the task's action space.
OracleResult random_search(const Environment& env, std::uint64_t n,
                           std::mt19937_64& rng);

}  // namespace mppo

#endif  // MPPO_ORACLE_HPP_
