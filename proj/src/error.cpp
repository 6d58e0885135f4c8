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

#include "mppo/error.hpp"

namespace mppo {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotHermitian:
      return "NotHermitian";
    case ErrorCode::kDimensionMismatch:
      return "DimensionMismatch";
    case ErrorCode::kLengthMismatch:
      return "LengthMismatch";
    case ErrorCode::kFieldOutOfRange:
      return "FieldOutOfRange";
    case ErrorCode::kShapeMismatch:
      return "ShapeMismatch";
    case ErrorCode::kSpaceTooLarge:
      return "SpaceTooLarge";
    case ErrorCode::kConfigInvalid:
      return "ConfigInvalid";
    case ErrorCode::kIoError:
      return "IoError";
    case ErrorCode::kMissingArtifact:
      return "MissingArtifact";
    case ErrorCode::kRewardMismatch:
      return "RewardMismatch";
    case ErrorCode::kNonFiniteLoss:
      return "NonFiniteLoss";
  }
  return "Unknown";
}

}  // namespace mppo
