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

#include "lanekit/error.hpp"

namespace lanekit {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateMotion: return "DegenerateMotion";
    case ErrorCode::kInsufficientTurning: return "InsufficientTurning";
    case ErrorCode::kNoForwardMotion: return "NoForwardMotion";
    case ErrorCode::kDegenerateFrame: return "DegenerateFrame";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kInvalidRotation: return "InvalidRotation";
    case ErrorCode::kInvalidCamera: return "InvalidCamera";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnknownCameraModel: return "UnknownCameraModel";
    case ErrorCode::kSequenceTooShort: return "SequenceTooShort";
    case ErrorCode::kRejectedSequence: return "RejectedSequence";
    case ErrorCode::kInvalidHeight: return "InvalidHeight";
    case ErrorCode::kInvertedBand: return "InvertedBand";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kUnknownBand: return "UnknownBand";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::kSequenceMismatch: return "SequenceMismatch";
    case ErrorCode::kInvalidParams: return "InvalidParams";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message),
      code_(code) {}

}  // namespace lanekit
