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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cdp/corpus.hpp"
#include "cdp/rational.hpp"

namespace cdp {

using Seconds = std::chrono::duration<double>;

struct ResourceLimits {
  Seconds wall_timeout{10.0};
  std::uint64_t memory_limit = 512ULL << 20;
  std::uint64_t max_output_bytes = 1ULL << 20;

  void validate() const;
};

// Slack the supervisor may add on top of wall_timeout between noticing the
// deadline and having reaped the whole process group.
inline constexpr Seconds kSupervisionGrace{0.5};

enum class Outcome { kPass, kWrongOutput, kRuntimeError, kTimeout, kOutputTruncated };

std::string_view outcome_name(Outcome outcome);
Outcome outcome_from_name(std::string_view name);

struct TestVerdict {
  std::string test_id;
  Outcome outcome = Outcome::kRuntimeError;
  Seconds elapsed{0};
  std::string captured_stdout;
  std::string captured_stderr;
};

struct ExecutionReport {
  std::string requirement_id;
  int candidate_index = 0;
  std::vector<TestVerdict> verdicts;
  bool all_passed = false;
  Rational pass_ratio;

  // Recomputes all_passed and pass_ratio from verdicts.
  void finalize();
};

// Trailing whitespace is dropped from every line, then trailing blank lines.
std::string normalize_output(std::string_view text);

struct SandboxConfig {
  // argv template; "{source_file}" is replaced by the path of the candidate.
  std::vector<std::string> interpreter_argv = {"python3", "-I", "-S", "{source_file}"};
  int parallelism = 4;
  // Prepended to the interpreter argv, e.g. {"firejail", "--net=none"}.
  std::vector<std::string> jail_argv;
  // Refuse to construct without a jail_argv.
  bool require_external_jail = false;
};

// Runs candidate programs in child processes: one process group per test,
// rlimits on address space and CPU, and a wall-clock supervisor that kills
// the whole group. Thread-safe.
class Sandbox {
 public:
  explicit Sandbox(SandboxConfig config = {});

  // Throws Error{kSandboxSpawnFailure} when the interpreter cannot be started.
  TestVerdict run_test(std::string_view program_source, const GoldenTest& test,
                       const ResourceLimits& limits) const;

  // Verdicts are in suite order even though tests run concurrently.
  ExecutionReport run_suite(std::string_view program_source, const CorpusRecord& record,
                            const ResourceLimits& limits, int candidate_index = 0) const;

  const SandboxConfig& config() const { return config_; }

 private:
  SandboxConfig config_;
};

// SIGKILLs every process group currently supervised by any Sandbox. The
// supervising threads then reap them and report Timeout/RuntimeError.
void terminate_active_sandboxes();

}  // namespace cdp
