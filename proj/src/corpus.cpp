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

#include "cdp/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cdp/error.hpp"
#include "cdp/jsonl.hpp"
#include "cdp/random.hpp"

namespace cdp {
namespace {

using nlohmann::json;

const std::set<std::string> kRecordKeys = {"requirement_id", "requirement_text",
                                           "reference_solution", "manual_difficulty", "tests"};
const std::set<std::string> kTestKeys = {"test_id", "mode", "input_text", "expected_output",
                                         "assertion_snippet"};

std::string string_field(const json& j, const char* key, bool required) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw std::invalid_argument(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw std::invalid_argument(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

json extras(const json& j, const std::set<std::string>& known) {
  json out = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) out[it.key()] = it.value();
  }
  return out;
}

GoldenTest test_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("test entry is not an object");
  GoldenTest t;
  t.test_id = string_field(j, "test_id", true);
  std::string mode = string_field(j, "mode", true);
  if (mode == "stdin_stdout") {
    t.mode = TestMode::kStdinStdout;
  } else if (mode == "assertion") {
    t.mode = TestMode::kAssertion;
  } else {
    throw std::invalid_argument("unknown test mode '" + mode + "'");
  }
  t.input_text = string_field(j, "input_text", false);
  t.expected_output = string_field(j, "expected_output", false);
  t.assertion_snippet = string_field(j, "assertion_snippet", false);
  if (t.mode == TestMode::kAssertion) {
    if (t.assertion_snippet.empty())
      throw std::invalid_argument("assertion test '" + t.test_id + "' has no assertion_snippet");
    if (!t.input_text.empty() || !t.expected_output.empty())
      throw std::invalid_argument("assertion test '" + t.test_id + "' carries stdin/stdout fields");
  } else if (!t.assertion_snippet.empty()) {
    throw std::invalid_argument("stdin_stdout test '" + t.test_id + "' carries an assertion_snippet");
  }
  t.extra = extras(j, kTestKeys);
  return t;
}

json test_to_json(const GoldenTest& t) {
  json j = t.extra;
  j["test_id"] = t.test_id;
  j["mode"] = t.mode == TestMode::kAssertion ? "assertion" : "stdin_stdout";
  j["input_text"] = t.input_text;
  j["expected_output"] = t.expected_output;
  j["assertion_snippet"] = t.assertion_snippet;
  return j;
}

const char* difficulty_name(ManualDifficulty d) {
  switch (d) {
    case ManualDifficulty::kIntroductory: return "introductory";
    case ManualDifficulty::kInterview: return "interview";
    case ManualDifficulty::kCompetition: return "competition";
  }
  return "";
}

}  // namespace

CorpusRecord record_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  CorpusRecord r;
  r.requirement_id = string_field(j, "requirement_id", true);
  if (r.requirement_id.empty()) throw std::invalid_argument("empty requirement_id");
  r.requirement_text = string_field(j, "requirement_text", true);
  if (r.requirement_text.empty()) throw std::invalid_argument("empty requirement_text");
  r.reference_solution = string_field(j, "reference_solution", false);

  std::string difficulty = string_field(j, "manual_difficulty", false);
  if (difficulty == "introductory") {
    r.manual_difficulty = ManualDifficulty::kIntroductory;
  } else if (difficulty == "interview") {
    r.manual_difficulty = ManualDifficulty::kInterview;
  } else if (difficulty == "competition") {
    r.manual_difficulty = ManualDifficulty::kCompetition;
  } else if (!difficulty.empty()) {
    throw std::invalid_argument("unknown manual_difficulty '" + difficulty + "'");
  }

  auto tests = j.find("tests");
  if (tests == j.end() || !tests->is_array()) throw std::invalid_argument("missing tests array");
  if (tests->empty()) throw std::invalid_argument("record has zero tests");
  std::set<std::string> seen;
  for (const auto& tj : *tests) {
    GoldenTest t = test_from_json(tj);
    if (!seen.insert(t.test_id).second)
      throw std::invalid_argument("duplicate test_id '" + t.test_id + "'");
    r.tests.push_back(std::move(t));
  }
  r.extra = extras(j, kRecordKeys);
  return r;
}

json record_to_json(const CorpusRecord& r) {
  json j = r.extra;
  j["requirement_id"] = r.requirement_id;
  j["requirement_text"] = r.requirement_text;
  j["reference_solution"] = r.reference_solution;
  j["manual_difficulty"] =
      r.manual_difficulty ? json(difficulty_name(*r.manual_difficulty)) : json(nullptr);
  json tests = json::array();
  for (const auto& t : r.tests) tests.push_back(test_to_json(t));
  j["tests"] = std::move(tests);
  return j;
}

std::vector<CorpusRecord> parse_corpus(std::string_view text) {
  std::vector<CorpusRecord> records;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    CorpusRecord r;
    try {
      r = record_from_json(json::parse(line));
    } catch (const std::exception& e) {
      fail(ErrorCode::kMalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(r.requirement_id).second)
      fail(ErrorCode::kDuplicateId, r.requirement_id);
    records.push_back(std::move(r));
  }
  if (records.empty()) fail(ErrorCode::kEmptyCorpus, "corpus contains no records");
  return records;
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_file(path));
}

void save_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(record_to_json(r));
  write_jsonl(path, lines);
}

CorpusSplit split_corpus(const std::vector<CorpusRecord>& records, const SplitSpec& spec) {
  require(!records.empty(), "split_corpus: empty corpus");
  require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0,
          "split_corpus: train_fraction must lie in (0, 1)");

  const std::size_t n = records.size();
  const auto n_train = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(n) + 0.5));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = make_stream(spec.seed, fnv1a("split"));
  shuffle(std::span(order), rng);

  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  CorpusSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? split.train : split.validation).push_back(records[i]);
  }
  return split;
}

const CorpusRecord* find_record(const std::vector<CorpusRecord>& records, std::string_view id) {
  for (const auto& r : records) {
    if (r.requirement_id == id) return &r;
  }
  return nullptr;
}

}  // namespace cdp
