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

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdp/corpus.hpp"
#include "cdp/generation.hpp"
#include "cdp/perception.hpp"
#include "cdp/rational.hpp"
#include "json.hpp"

namespace cdp {

// Ordered attribute names that make up an optimized requirement. Extra
// attributes may be appended through configuration.
struct AttributeSchema {
  std::vector<std::string> names = {"Requirement Explanation", "Key Concepts", "Input Constraints",
                                    "Output Constraints", "Pseudocode"};
};

enum class Provenance { kAgentDraft, kRevised };

struct OptimizedRequirement {
  std::string requirement_id;
  // One entry per schema attribute, schema order.
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string final_text;
  Provenance provenance = Provenance::kAgentDraft;

  const std::string& attribute(std::string_view name) const;
  const std::string& explanation() const { return attributes.at(0).second; }
  const std::string& key_concepts() const { return attributes.at(1).second; }
  const std::string& input_constraints() const { return attributes.at(2).second; }
  const std::string& output_constraints() const { return attributes.at(3).second; }
  const std::string& pseudocode() const { return attributes.at(4).second; }
};

enum class Issue { kAmbiguity, kRedundancy, kLogicalInconsistency, kIncompleteness };

std::string_view issue_name(Issue issue);

struct RevisionReport {
  std::string requirement_id;
  std::vector<Issue> issues_found;
  bool revised = false;
};

enum class Decision { kAcceptOptimized, kRetainOriginal };

struct OptimizationOutcome {
  std::string requirement_id;
  Rational original_rds;
  Rational optimized_rds;
  Decision decision = Decision::kRetainOriginal;
  std::string effective_text;
  std::vector<Issue> revision_issues;
  // Set when the pipeline could not optimize this requirement.
  std::string error;
};

// "### <name>" header per attribute, schema order, blank line between.
std::string assemble_attributes(const AttributeSchema& schema, const std::vector<std::string>& values);
// Values in schema order, or nullopt when a header is missing, out of order,
// or its section is empty.
std::optional<std::vector<std::string>> parse_attributes(const AttributeSchema& schema,
                                                         std::string_view text);

inline constexpr std::string_view kDefaultOptimizePrompt =
    "You are improving a programming requirement so that it is easier to solve correctly.\n"
    "You are given the original requirement and a correct reference implementation.\n"
    "Rewrite the requirement as the following sections, in this order, each introduced by a\n"
    "line of the form '### <section name>':\n{attributes}\n"
    "Do not reveal the reference implementation verbatim.\n\n"
    "## Original requirement\n{requirement}\n\n## Reference implementation\n{golden_code}\n";

inline constexpr std::string_view kDefaultRevisePrompt =
    "You are reviewing an optimized programming requirement against the original requirement\n"
    "and a correct reference implementation. Check it for ambiguity, redundancy, logical\n"
    "inconsistency and incompleteness.\n"
    "Answer with a first line 'ISSUES: none' if it needs no change. Otherwise answer with\n"
    "'ISSUES: <comma separated list of the problem kinds found>' followed by the corrected\n"
    "requirement using the same '### <section name>' sections:\n{attributes}\n\n"
    "## Original requirement\n{requirement}\n\n## Reference implementation\n{golden_code}\n\n"
    "## Optimized requirement\n{draft}\n";

struct AgentOptions {
  AttributeSchema schema;
  std::string optimize_prompt{kDefaultOptimizePrompt};
  std::string revise_prompt{kDefaultRevisePrompt};
  double temperature = 0.0;
  int max_tokens = 2048;
  // Total asks per agent call: the first try plus one re-ask on a parse failure.
  int max_asks = 2;
};

// Fixture keys used with stub backends.
std::string optimize_fixture_key(std::string_view requirement_id);
std::string revise_fixture_key(std::string_view requirement_id);
std::string optimized_fixture_key(std::string_view requirement_id);

OptimizedRequirement optimize_requirement(const CorpusRecord& record, const AgentOptions& options,
                                          Backend& backend);

std::pair<OptimizedRequirement, RevisionReport> revise_requirement(const CorpusRecord& record,
                                                                   const OptimizedRequirement& draft,
                                                                   const AgentOptions& options,
                                                                   Backend& backend);

// Re-perceives the revised text and keeps it only on strict RDS improvement.
OptimizationOutcome accept_or_retain(const CorpusRecord& record, const OptimizedRequirement& revised,
                                     const DifficultyRecord& original,
                                     const PerceptionOptions& perception, Backend& backend,
                                     CandidateRunner& runner);

// Decision rule in isolation.
OptimizationOutcome decide(const CorpusRecord& record, const std::string& optimized_text,
                           Rational original_rds, Rational optimized_rds);

struct OptimizeOptions {
  AgentOptions agents;
  PerceptionOptions perception;
  // Also rewrite requirements that are not in the challenging set.
  bool include_non_challenging = false;
};

// optimize -> revise -> accept_or_retain for each challenging requirement, in
// corpus order. Per-requirement failures are recorded as RetainOriginal with
// `error` set.
std::vector<OptimizationOutcome> optimize_corpus(const std::vector<CorpusRecord>& records,
                                                 const std::vector<DifficultyRecord>& difficulty,
                                                 const OptimizeOptions& options,
                                                 Backend& generation_backend, Backend& agent_backend,
                                                 CandidateRunner& runner);

nlohmann::json outcome_to_json(const OptimizationOutcome& outcome);
OptimizationOutcome outcome_from_json(const nlohmann::json& j);
void save_outcomes(const std::filesystem::path& path, const std::vector<OptimizationOutcome>& outcomes);
std::vector<OptimizationOutcome> load_outcomes(const std::filesystem::path& path);

}  // namespace cdp
