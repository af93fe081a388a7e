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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdp {

// Stable artifact names under --out-dir.
inline constexpr const char* kCorpusArtifact = "corpus.jsonl";
inline constexpr const char* kTrainArtifact = "train.jsonl";
inline constexpr const char* kValidationArtifact = "validation.jsonl";
inline constexpr const char* kPerceptionArtifact = "perception.jsonl";
inline constexpr const char* kPerceptionCache = "perception-cache.jsonl";
inline constexpr const char* kOptimizationArtifact = "optimization.jsonl";
inline constexpr const char* kPlanArtifact = "plan.json";
inline constexpr const char* kScheduleArtifact = "schedule.jsonl";
inline constexpr const char* kScheduleTextsArtifact = "schedule_texts.json";
inline constexpr const char* kEvalArtifact = "eval.jsonl";

// Entry point of the `cdp` tool. `args` excludes the program name. Returns
// the process exit status; failures print one JSON error line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cdp
