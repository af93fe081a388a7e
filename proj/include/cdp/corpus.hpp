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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cdp {

enum class TestMode { kStdinStdout, kAssertion };

struct GoldenTest {
  std::string test_id;
  TestMode mode = TestMode::kStdinStdout;
  std::string input_text;
  std::string expected_output;
  std::string assertion_snippet;
  // Fields not understood by this version; written back unchanged.
  nlohmann::json extra = nlohmann::json::object();
};

enum class ManualDifficulty { kIntroductory, kInterview, kCompetition };

struct CorpusRecord {
  std::string requirement_id;
  std::string requirement_text;
  std::string reference_solution;
  std::vector<GoldenTest> tests;
  std::optional<ManualDifficulty> manual_difficulty;
  nlohmann::json extra = nlohmann::json::object();
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct CorpusSplit {
  std::vector<CorpusRecord> train;
  std::vector<CorpusRecord> validation;
};

// One JSON object per line. Throws Error{kMalformedRecord} with the 1-based
// line number, Error{kDuplicateId}, or Error{kEmptyCorpus}.
std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path);
std::vector<CorpusRecord> parse_corpus(std::string_view text);
void save_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);

nlohmann::json record_to_json(const CorpusRecord& record);
// Throws a plain std::invalid_argument describing the first violation.
CorpusRecord record_from_json(const nlohmann::json& j);

// Membership is the prefix of a seeded permutation; both halves keep the
// input order. |train| = round(train_fraction * n).
CorpusSplit split_corpus(const std::vector<CorpusRecord>& records, const SplitSpec& spec);

const CorpusRecord* find_record(const std::vector<CorpusRecord>& records, std::string_view id);

}  // namespace cdp
