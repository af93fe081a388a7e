// Copyright 2026 The cdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdp/error.hpp"

namespace cdp {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kSandboxSpawnFailure: return "SandboxSpawnFailure";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kBackendRejected: return "BackendRejected";
    case ErrorCode::kMixedRequirementIds: return "MixedRequirementIds";
    case ErrorCode::kEmptyReports: return "EmptyReports";
    case ErrorCode::kUnclassifiableSource: return "UnclassifiableSource";
    case ErrorCode::kAgentOutputUnparseable: return "AgentOutputUnparseable";
    case ErrorCode::kPrecondition: return "PreconditionViolated";
    case ErrorCode::kBatchLargerThanCorpus: return "BatchLargerThanCorpus";
    case ErrorCode::kInconsistentK: return "InconsistentK";
    case ErrorCode::kDomain: return "DomainError";
    case ErrorCode::kAllDifferencesZero: return "AllDifferencesZero";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInvalidMix: return "InvalidMix";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace cdp
