// Copyright 2026 The Soundmix Authors
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

namespace soundmix {

enum class ErrorCode {
  // audio / container errors
  MalformedContainer,
  UnsupportedEncoding,
  EmptyAudio,
  IoFailure,
  InvalidRate,
  // mixing / metadata errors
  LengthMismatch,
  RateMismatch,
  InsufficientPool,
  UnknownSchema,
  BadRow,
  // feature errors
  TooShort,
  InvalidRange,
  DegenerateStd,
  // model / training errors
  ShapeMismatch,
  InvalidTarget,
  StaleCache,
  TooFewItems,
  EmptySplit,
  NonFiniteLoss,
  // metrics / misc
  NameCountMismatch,
  InvalidArgument,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedContainer: return "MalformedContainer";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::EmptyAudio: return "EmptyAudio";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::UnknownSchema: return "UnknownSchema";
    case ErrorCode::BadRow: return "BadRow";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::DegenerateStd: return "DegenerateStd";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::TooFewItems: return "TooFewItems";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::NameCountMismatch: return "NameCountMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace soundmix
