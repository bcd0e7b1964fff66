// Copyright 2026 The lanekit Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lanekit {

enum class ErrorCode {
  kDegenerateMotion,
  kInsufficientTurning,
  kNoForwardMotion,
  kDegenerateFrame,
  kBehindCamera,
  kInvalidRotation,
  kInvalidCamera,
  kParseError,
  kUnknownCameraModel,
  kSequenceTooShort,
  kRejectedSequence,
  kInvalidHeight,
  kInvertedBand,
  kOutOfRange,
  kUnknownBand,
  kVersionMismatch,
  kIoError,
  kShapeMismatch,
  kEmptyEvaluation,
  kSequenceMismatch,
  kInvalidParams,
};

std::string_view error_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (CLI exit codes, HTTP status mapping) can branch without parsing
// messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lanekit
