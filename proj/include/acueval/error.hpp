// Copyright 2026 The acueval Authors.
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

namespace acueval {

enum class Errc {
  kMalformedRecord,
  kDanglingReference,
  kDuplicateKey,
  kIncompleteGrid,
  kInconsistentCoverage,
  kEmptyAcuSet,
  kInvalidAlpha,
  kZeroReferenceLength,
  kDegenerateLengths,
  kEmptyCandidate,
  kEmptySource,
  kLengthMismatch,
  kShapeMismatch,
  kAllRowsDegenerate,
  kDegenerate,
  kTooManyBuckets,
  kEmptyBucket,
  kInsufficientData,
  kInvalidArgument,
  kRateLimited,
  kNoLogprobs,
  kTransportError,
  kUnparseableScore,
  kBatchFailed,
  kMissingArtifact,
  kIo,
};

std::string_view errc_name(Errc code);

// All module failures surface as this exception; `code()` identifies the
// contract violation and `what()` carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace acueval
