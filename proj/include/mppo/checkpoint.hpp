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

#ifndef MPPO_CHECKPOINT_HPP_
#define MPPO_CHECKPOINT_HPP_

#include <filesystem>

#include <json.hpp>

#include "mppo/policy.hpp"

namespace mppo {

// {"format": "mppo-checkpoint", "version": 1, "n_choices", "n_continuous",
//  "value_scale", "hidden", "sigma", "density",
//  "tensors": [{"name", "shape": [rows, cols], "data": [column-major]}]}
// Doubles are written in shortest round-trip form, so load(save(p)) == p.
nlohmann::json checkpoint_to_json(const PolicyParameters& params);
PolicyParameters checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const PolicyParameters& params);
// Throws MissingArtifact if the file is absent, ShapeMismatch if a tensor
// disagrees with the layout implied by the header fields.
PolicyParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace mppo

#endif  // MPPO_CHECKPOINT_HPP_
