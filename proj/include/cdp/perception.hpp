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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cdp/corpus.hpp"
#include "cdp/generation.hpp"
#include "cdp/rational.hpp"
#include "cdp/sandbox.hpp"
#include "json.hpp"

namespace cdp {

enum class RecordStatus { kOk, kSkipped };

struct DifficultyRecord {
  std::string requirement_id;
  int n_samples = 0;
  int n_correct = 0;
  // 1 - n_correct/n_samples, exact.
  Rational rds{1};
  std::vector<ExecutionReport> per_candidate;
  bool resolved = false;
  RecordStatus status = RecordStatus::kOk;
  // Why the record was skipped; empty when status is kOk.
  std::string error;
};

// Throws Error{kEmptyReports} or Error{kMixedRequirementIds}.
DifficultyRecord compute_rds(const std::vector<ExecutionReport>& reports);

// Executes one candidate against a record's golden tests. The production
// implementation is the sandbox; the simulator plugs in a Bernoulli stand-in.
class CandidateRunner {
 public:
  virtual ~CandidateRunner() = default;
  virtual ExecutionReport run(const CorpusRecord& record, const CandidateCode& candidate) = 0;
  virtual std::string fingerprint() const = 0;
};

class SandboxRunner : public CandidateRunner {
 public:
  SandboxRunner(const Sandbox& sandbox, ResourceLimits limits)
      : sandbox_(sandbox), limits_(limits) {}

  ExecutionReport run(const CorpusRecord& record, const CandidateCode& candidate) override {
    return sandbox_.run_suite(candidate.extracted_source, record, limits_, candidate.candidate_index);
  }
  std::string fingerprint() const override;

 private:
  const Sandbox& sandbox_;
  ResourceLimits limits_;
};

struct PerceptionOptions {
  GenerationConfig generation;
  std::string prompt_template{kDefaultGenerationPrompt};
  // Requirements perceived concurrently.
  int parallelism = 4;
  // Line-per-record cache; finished records are appended as they complete
  // so an interrupted run resumes where it stopped.
  std::optional<std::filesystem::path> cache_path;
};

// Samples N candidates for `requirement_text` (fixture key `fixture_key`),
// runs each against the record's golden tests and scores the result.
DifficultyRecord perceive_requirement(const CorpusRecord& record, std::string_view requirement_text,
                                      std::string_view fixture_key, const PerceptionOptions& options,
                                      Backend& backend, CandidateRunner& runner);

// One record per input, in input order. Backend and sandbox failures of a
// single requirement turn into status kSkipped instead of aborting.
std::vector<DifficultyRecord> perceive_corpus(const std::vector<CorpusRecord>& records,
                                              const PerceptionOptions& options, Backend& backend,
                                              CandidateRunner& runner);

// Ids with rds exactly 1, in input order. Skipped records never qualify.
std::vector<std::string> challenging_set(const std::vector<DifficultyRecord>& records);

// Fraction of perceived (non-skipped) records with at least one correct sample.
Rational learning_utilization_rate(const std::vector<DifficultyRecord>& records);

// Summary line for the perception artifact: requirement_id, n_samples,
// n_correct, rds, resolved, status (+ error when skipped).
nlohmann::json difficulty_to_json(const DifficultyRecord& record);
DifficultyRecord difficulty_from_json(const nlohmann::json& j);
// Summary plus per-candidate verdict outcomes; used by the cache.
nlohmann::json difficulty_to_cache_json(const DifficultyRecord& record);
DifficultyRecord difficulty_from_cache_json(const nlohmann::json& j);

void save_perception(const std::filesystem::path& path, const std::vector<DifficultyRecord>& records);
std::vector<DifficultyRecord> load_perception(const std::filesystem::path& path);

// Reference-solution complexity baseline: mean of a keyword-count
// approximation of cyclomatic complexity and Halstead difficulty.
struct StaticDifficulty {
  std::string requirement_id;
  int cyclomatic_approx = 1;
  double halstead_difficulty = 0.0;
  double overall_metric = 0.0;
};

// Token classes for Python-like source:
//   operators: keywords other than True/False/None; arithmetic, bitwise,
//              comparison, assignment and augmented-assignment symbols;
//              "." "->" ":=" "..." and the opening brackets ( [ { (each
//              bracket pair counts once).
//   operands:  identifiers, numeric literals, string literals, True/False/None.
//   ignored:   comments, whitespace, closing brackets, ',' ':' ';'.
// cyclomatic_approx = 1 + #tokens in {if, elif, for, while, and, or, except, case}.
// halstead_difficulty = (n1 / 2) * (N2 / n2).
// Throws Error{kUnclassifiableSource} when the source has no operands.
StaticDifficulty static_difficulty(std::string_view reference_solution,
                                   std::string requirement_id = {});

}  // namespace cdp
