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

#include "mppo/environment.hpp"

#include <cstddef>

namespace mppo {

std::vector<double> score_batch(const Environment& env,
                                std::span<const ControlSequence> batch) {
  std::vector<double> rewards(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    rewards[static_cast<std::size_t>(i)] =
        env.reward(batch[static_cast<std::size_t>(i)]);
  }
  return rewards;
}

std::vector<double> score_batch_serial(const Environment& env,
                                       std::span<const ControlSequence> batch) {
  std::vector<double> rewards;
  rewards.reserve(batch.size());
  for (const auto& seq : batch) rewards.push_back(env.reward(seq));
  return rewards;
}

}  // namespace mppo
