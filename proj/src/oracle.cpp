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

#include "mppo/oracle.hpp"

#include <string>
#include <vector>

#include "mppo/error.hpp"

namespace mppo {
namespace {

std::uint64_t space_size(const Environment& env, std::uint64_t cap) {
  const TaskShape shape = env.shape();
  if (!shape.discrete()) {
    throw Error(ErrorCode::kShapeMismatch,
                "brute_force: only discrete tasks can be enumerated");
  }
  std::uint64_t size = 1;
  for (int t = 0; t < env.steps(); ++t) {
    if (size > cap / static_cast<std::uint64_t>(shape.n_choices)) {
      throw Error(ErrorCode::kSpaceTooLarge,
                  "brute_force: " + std::to_string(shape.n_choices) + "^" +
                      std::to_string(env.steps()) + " sequences exceed cap " +
                      std::to_string(cap));
    }
    size *= static_cast<std::uint64_t>(shape.n_choices);
  }
  return size;
}

struct Best {
  std::uint64_t index = 0;
  double reward = -1.0;
};

// Scans [begin, end) keeping the first maximum.
Best scan(const Environment& env, std::uint64_t begin, std::uint64_t end) {
  const int nc = env.shape().n_choices;
  const int steps = env.steps();
  Best best;
  ControlSequence seq = sequence_from_index(begin, nc, steps);
  for (std::uint64_t i = begin; i < end; ++i) {
    const double r = env.reward(seq);
    if (r > best.reward) best = {i, r};
    // Increment the mixed-radix counter.
    for (int t = steps - 1; t >= 0; --t) {
      auto& c = seq.choices[static_cast<std::size_t>(t)];
      if (++c < nc) break;
      c = 0;
    }
  }
  return best;
}

OracleResult finish(const Environment& env, const Best& best, std::uint64_t count) {
  OracleResult out;
  out.best_sequence = sequence_from_index(best.index, env.shape().n_choices, env.steps());
  out.best_reward = best.reward;
  out.evaluated_count = count;
  out.exhaustive = true;
  return out;
}

}  // namespace

ControlSequence sequence_from_index(std::uint64_t index, int n_choices, int steps) {
  ControlSequence seq;
  seq.choices.assign(static_cast<std::size_t>(steps), 0);
  for (int t = steps - 1; t >= 0; --t) {
    seq.choices[static_cast<std::size_t>(t)] =
        static_cast<int>(index % static_cast<std::uint64_t>(n_choices));
    index /= static_cast<std::uint64_t>(n_choices);
  }
  return seq;
}

OracleResult brute_force(const Environment& env, std::uint64_t cap) {
  const std::uint64_t size = space_size(env, cap);
  constexpr std::uint64_t kChunk = 4096;
  const auto chunks = static_cast<std::ptrdiff_t>((size + kChunk - 1) / kChunk);
  std::vector<Best> partial(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::uint64_t begin = static_cast<std::uint64_t>(c) * kChunk;
    partial[static_cast<std::size_t>(c)] =
        scan(env, begin, std::min(size, begin + kChunk));
  }
  // Chunks are reduced in enumeration order with a strict comparison, which
  // keeps the lexicographically first maximizer.
  Best best;
  for (const Best& b : partial) {
    if (b.reward > best.reward) best = b;
  }
  return finish(env, best, size);
}

OracleResult brute_force_serial(const Environment& env, std::uint64_t cap) {
  const std::uint64_t size = space_size(env, cap);
  return finish(env, scan(env, 0, size), size);
}

OracleResult random_search(const Environment& env, std::uint64_t n,
                           std::mt19937_64& rng) {
  if (n < 1) {
    throw Error(ErrorCode::kConfigInvalid, "random_search: n must be at least 1");
  }
  std::vector<ControlSequence> draws;
  draws.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) draws.push_back(env.random_sequence(rng));
  const std::vector<double> rewards = score_batch(env, draws);
  std::size_t best = 0;
  for (std::size_t i = 1; i < rewards.size(); ++i) {
    if (rewards[i] > rewards[best]) best = i;
  }
  OracleResult out;
  out.best_sequence = draws[best];
  out.best_reward = rewards[best];
  out.evaluated_count = n;
  out.exhaustive = false;
  return out;
}

}  // namespace mppo
