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

#include "mppo/checkpoint.hpp"

#include <fstream>

#include "mppo/error.hpp"

namespace mppo {

using nlohmann::json;

json checkpoint_to_json(const PolicyParameters& params) {
  const TaskShape& shape = params.shape();
  json tensors = json::array();
  for (const TensorSpec& s : params.tensors()) {
    const auto data = params.values().subspan(s.offset, s.rows * s.cols);
    tensors.push_back({{"name", s.name},
                       {"shape", {s.rows, s.cols}},
                       {"data", std::vector<double>(data.begin(), data.end())}});
  }
  return {{"format", "mppo-checkpoint"},
          {"version", 1},
          {"n_choices", shape.n_choices},
          {"n_continuous", shape.n_continuous},
          {"value_scale", shape.value_scale},
          {"hidden", params.hidden()},
          {"sigma", params.sigma},
          {"density", params.density == MixtureDensity::kJoint ? "joint" : "marginal"},
          {"tensors", std::move(tensors)}};
}

PolicyParameters checkpoint_from_json(const json& j) {
  try {
    if (j.at("format") != "mppo-checkpoint" || j.at("version") != 1) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint: unsupported format or version");
    }
    TaskShape shape;
    shape.n_choices = j.at("n_choices").get<int>();
    shape.n_continuous = j.at("n_continuous").get<int>();
    shape.value_scale = j.at("value_scale").get<std::vector<double>>();
    PolicyParameters params(shape, j.at("hidden").get<int>());
    params.sigma = j.at("sigma").get<double>();
    params.density = j.at("density") == "marginal" ? MixtureDensity::kMarginal
                                                   : MixtureDensity::kJoint;
    const json& tensors = j.at("tensors");
    if (tensors.size() != params.tensors().size()) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint: wrong number of tensors");
    }
    auto values = params.values();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const TensorSpec& s = params.tensors()[i];
      const json& t = tensors[i];
      const auto dims = t.at("shape").get<std::vector<Eigen::Index>>();
      const auto data = t.at("data").get<std::vector<double>>();
      if (t.at("name") != s.name || dims.size() != 2 || dims[0] != s.rows ||
          dims[1] != s.cols || data.size() != static_cast<std::size_t>(s.rows * s.cols)) {
        throw Error(ErrorCode::kShapeMismatch,
                    "checkpoint: tensor " + s.name + " does not match the layout");
      }
      std::copy(data.begin(), data.end(), values.begin() + s.offset);
    }
    return params;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kShapeMismatch, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParameters& params) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << checkpoint_to_json(params).dump() << "\n";
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

PolicyParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingArtifact, "missing " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kIoError, path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace mppo
