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

#ifndef MPPO_ERROR_HPP_
#define MPPO_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace mppo {

enum class ErrorCode {
  kNotHermitian,
  kDimensionMismatch,
  kLengthMismatch,
  kFieldOutOfRange,
  kShapeMismatch,
  kSpaceTooLarge,
  kConfigInvalid,
  kIoError,
  kMissingArtifact,
  kRewardMismatch,
  kNonFiniteLoss,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries a stable code so the CLI can
// map it onto an exit status and a machine-parsable prefix.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mppo

#endif  // MPPO_ERROR_HPP_
