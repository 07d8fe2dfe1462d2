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

#include "acueval/error.hpp"

namespace acueval {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kMalformedRecord: return "MalformedRecord";
    case Errc::kDanglingReference: return "DanglingReference";
    case Errc::kDuplicateKey: return "DuplicateKey";
    case Errc::kIncompleteGrid: return "IncompleteGrid";
    case Errc::kInconsistentCoverage: return "InconsistentCoverage";
    case Errc::kEmptyAcuSet: return "EmptyAcuSet";
    case Errc::kInvalidAlpha: return "InvalidAlpha";
    case Errc::kZeroReferenceLength: return "ZeroReferenceLength";
    case Errc::kDegenerateLengths: return "DegenerateLengths";
    case Errc::kEmptyCandidate: return "EmptyCandidate";
    case Errc::kEmptySource: return "EmptySource";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kAllRowsDegenerate: return "AllRowsDegenerate";
    case Errc::kDegenerate: return "Degenerate";
    case Errc::kTooManyBuckets: return "TooManyBuckets";
    case Errc::kEmptyBucket: return "EmptyBucket";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kRateLimited: return "RateLimited";
    case Errc::kNoLogprobs: return "NoLogprobs";
    case Errc::kTransportError: return "TransportError";
    case Errc::kUnparseableScore: return "UnparseableScore";
    case Errc::kBatchFailed: return "BatchFailed";
    case Errc::kMissingArtifact: return "MissingArtifact";
    case Errc::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace acueval
