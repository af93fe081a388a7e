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

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cdp/corpus.hpp"
#include "cdp/perception.hpp"

namespace cdp::testing {

class TempDir {
 public:
  TempDir() {
    std::string templ = (std::filesystem::temp_directory_path() / "cdp-test-XXXXXX").string();
    path_ = ::mkdtemp(templ.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline CorpusRecord make_record(std::string id, std::string text = "requirement") {
  CorpusRecord r;
  r.requirement_id = std::move(id);
  r.requirement_text = std::move(text);
  r.reference_solution = "print(input())\n";
  GoldenTest t;
  t.test_id = "t0";
  t.input_text = "7\n";
  t.expected_output = "7\n";
  r.tests.push_back(std::move(t));
  return r;
}

// Candidate passes its single test iff its extracted source is "PASS".
class FakeRunner : public CandidateRunner {
 public:
  ExecutionReport run(const CorpusRecord& record, const CandidateCode& candidate) override {
    ++calls;
    ExecutionReport report;
    report.requirement_id = record.requirement_id;
    report.candidate_index = candidate.candidate_index;
    for (const auto& t : record.tests) {
      TestVerdict v;
      v.test_id = t.test_id;
      v.outcome = candidate.extracted_source == "PASS" ? Outcome::kPass : Outcome::kWrongOutput;
      report.verdicts.push_back(std::move(v));
    }
    report.finalize();
    return report;
  }
  std::string fingerprint() const override { return "fake"; }

  std::atomic<int> calls{0};
};

// `passing` copies of "PASS" followed by failures, n in total.
inline std::vector<std::string> completions(int n, int passing) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(i < passing ? "PASS" : "FAIL");
  return out;
}

inline ExecutionReport report(const std::string& id, int index, bool passed) {
  ExecutionReport r;
  r.requirement_id = id;
  r.candidate_index = index;
  TestVerdict v;
  v.test_id = "t0";
  v.outcome = passed ? Outcome::kPass : Outcome::kWrongOutput;
  r.verdicts.push_back(v);
  r.finalize();
  return r;
}

inline DifficultyRecord difficulty(const std::string& id, int n_correct, int n = 16) {
  DifficultyRecord d;
  d.requirement_id = id;
  d.n_samples = n;
  d.n_correct = n_correct;
  d.rds = Rational(1) - Rational(n_correct, n);
  d.resolved = n_correct > 0;
  return d;
}

inline std::filesystem::path source_dir() { return CDP_SOURCE_DIR; }
inline std::filesystem::path micro_dir() { return source_dir() / "data" / "micro"; }

}  // namespace cdp::testing
