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

#include <fstream>
#include <thread>

#include "cdp/error.hpp"
#include "cdp/sandbox.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cdp;
using namespace std::chrono_literals;

namespace {

GoldenTest io(std::string input, std::string expected, std::string id = "t") {
  GoldenTest t;
  t.test_id = std::move(id);
  t.input_text = std::move(input);
  t.expected_output = std::move(expected);
  return t;
}

GoldenTest assertion(std::string snippet, std::string id = "a") {
  GoldenTest t;
  t.test_id = std::move(id);
  t.mode = TestMode::kAssertion;
  t.assertion_snippet = std::move(snippet);
  return t;
}

ResourceLimits limits(double wall = 5.0) {
  ResourceLimits l;
  l.wall_timeout = Seconds(wall);
  return l;
}

int count_processes_with(const std::string& marker) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator("/proc")) {
    std::ifstream in(entry.path() / "cmdline");
    std::string cmd((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (cmd.find(marker) != std::string::npos) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("normalize_output drops trailing whitespace and blank lines") {
  CHECK(normalize_output("7") == "7");
  CHECK(normalize_output("7\n") == "7");
  CHECK(normalize_output("a  \nb\t\n\n\n") == "a\nb");
  CHECK(normalize_output("a\r\nb\r\n") == "a\nb");
  CHECK(normalize_output("\n\na") == "\n\na");
  CHECK(normalize_output("") == "");
}

TEST_CASE("run_test verdicts") {
  Sandbox sandbox;
  SUBCASE("echo passes") {
    auto v = sandbox.run_test("print(input())", io("7", "7"), limits());
    CHECK(v.outcome == Outcome::kPass);
    CHECK(v.captured_stdout == "7\n");
  }
  SUBCASE("mismatch is WrongOutput") {
    CHECK(sandbox.run_test("print(1)", io("", "2"), limits()).outcome == Outcome::kWrongOutput);
  }
  SUBCASE("whitespace differences are tolerated") {
    CHECK(sandbox.run_test("print('1 2   ')\nprint()", io("", "1 2\n"), limits()).outcome == Outcome::kPass);
  }
  SUBCASE("nonzero exit is RuntimeError even with matching output") {
    auto v = sandbox.run_test("print(2)\nraise SystemExit(3)", io("", "2"), limits());
    CHECK(v.outcome == Outcome::kRuntimeError);
  }
  SUBCASE("exceptions land in stderr") {
    auto v = sandbox.run_test("raise ValueError('boom')", io("", ""), limits());
    CHECK(v.outcome == Outcome::kRuntimeError);
    CHECK(v.captured_stderr.find("boom") != std::string::npos);
  }
  SUBCASE("busy loop times out") {
    auto v = sandbox.run_test("while True: pass", io("", ""), limits(1.0));
    CHECK(v.outcome == Outcome::kTimeout);
    CHECK(v.elapsed >= 1s);
    CHECK(v.elapsed <= Seconds(1.0) + kSupervisionGrace);
  }
  SUBCASE("a program that never reads stdin still finishes") {
    std::string big(4 << 20, 'x');
    auto v = sandbox.run_test("print('ok')", io(big, "ok"), limits());
    CHECK(v.outcome == Outcome::kPass);
  }
  SUBCASE("large stdin is delivered completely") {
    std::string big(3 << 20, 'y');
    auto v = sandbox.run_test("import sys\nprint(len(sys.stdin.read()))", io(big, std::to_string(big.size())),
                              limits());
    CHECK(v.outcome == Outcome::kPass);
  }
  SUBCASE("output beyond the cap is truncated") {
    ResourceLimits l = limits();
    l.max_output_bytes = 1000;
    auto v = sandbox.run_test("while True: print('x' * 100)", io("", ""), l);
    CHECK(v.outcome == Outcome::kOutputTruncated);
    CHECK(v.captured_stdout.size() == 1000);
  }
  SUBCASE("address-space limit stops large allocations") {
    ResourceLimits l = limits();
    l.memory_limit = 256ULL << 20;
    auto v = sandbox.run_test("x = bytearray(1 << 30)\nprint('allocated')", io("", "allocated"), l);
    CHECK(v.outcome == Outcome::kRuntimeError);
  }
}

TEST_CASE("assertion mode appends the snippet") {
  Sandbox sandbox;
  const std::string program = "def add(a, b):\n    return a + b";
  CHECK(sandbox.run_test(program, assertion("assert add(2, 3) == 5"), limits()).outcome == Outcome::kPass);
  CHECK(sandbox.run_test(program, assertion("assert add(2, 3) == 6"), limits()).outcome ==
        Outcome::kRuntimeError);
}

TEST_CASE("run_suite aggregates in suite order") {
  Sandbox sandbox;
  CorpusRecord record = cdp::testing::make_record("r");
  record.tests = {io("1", "1", "t0"), io("2", "2", "t1"), io("3", "4", "t2")};
  auto report = sandbox.run_suite("print(input())", record, limits(), 5);
  CHECK(report.requirement_id == "r");
  CHECK(report.candidate_index == 5);
  REQUIRE(report.verdicts.size() == 3);
  CHECK(report.verdicts[0].test_id == "t0");
  CHECK(report.verdicts[2].test_id == "t2");
  CHECK_FALSE(report.all_passed);
  CHECK(report.pass_ratio == Rational(2, 3));

  auto empty = sandbox.run_suite("", record, limits());
  for (const auto& v : empty.verdicts) CHECK(v.outcome == Outcome::kRuntimeError);
  CHECK(empty.pass_ratio == Rational(0));

  auto same = sandbox.run_suite("print(input())", record, limits(), 5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same.verdicts[i].outcome == report.verdicts[i].outcome);
}

TEST_CASE("micro corpus reference solutions pass their own tests") {
  Sandbox sandbox;
  for (const auto& record : load_corpus(cdp::testing::micro_dir() / "corpus.jsonl")) {
    auto report = sandbox.run_suite(record.reference_solution, record, limits());
    CHECK_MESSAGE(report.all_passed, record.requirement_id);
    CHECK(report.pass_ratio == Rational(1));
  }
}

TEST_CASE("spawn failures are errors, not verdicts") {
  SandboxConfig cfg;
  cfg.interpreter_argv = {"/nonexistent/interpreter", "{source_file}"};
  Sandbox sandbox(cfg);
  try {
    sandbox.run_test("print(1)", io("", "1"), limits());
    FAIL("expected SandboxSpawnFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSandboxSpawnFailure);
  }
}

TEST_CASE("jail argv is prepended and can be required") {
  SandboxConfig cfg;
  cfg.require_external_jail = true;
  CHECK_THROWS_AS(Sandbox{cfg}, Error);
  cfg.jail_argv = {"env", "CDP_JAILED=1"};
  Sandbox jailed(cfg);
  auto v = jailed.run_test("import os\nprint(os.environ.get('CDP_JAILED'))", io("", "1"), limits());
  CHECK(v.outcome == Outcome::kPass);
}

TEST_CASE("background children are killed with their test") {
  Sandbox sandbox;
  const std::string marker = "cdp-orphan-probe-" + std::to_string(::getpid());
  const std::string program =
      "import subprocess\n"
      "subprocess.Popen(['sleep', '30', '" + marker + "'], start_new_session=False)\n"
      "print('spawned')\n";
  // The sleeper is in the test's process group; it must not outlive the test.
  auto v = sandbox.run_test(program, io("", "spawned"), limits());
  CHECK(v.outcome == Outcome::kPass);
  CHECK(count_processes_with(marker) == 0);

  auto t = sandbox.run_test(program + "while True: pass\n", io("", ""), limits(0.5));
  CHECK(t.outcome == Outcome::kTimeout);
  CHECK(count_processes_with(marker) == 0);
}

TEST_CASE("terminate_active_sandboxes ends running tests") {
  Sandbox sandbox;
  std::thread killer([] {
    std::this_thread::sleep_for(300ms);
    terminate_active_sandboxes();
  });
  auto start = std::chrono::steady_clock::now();
  auto v = sandbox.run_test("import time\ntime.sleep(20)", io("", ""), limits(20.0));
  killer.join();
  CHECK(v.outcome == Outcome::kRuntimeError);
  CHECK(std::chrono::steady_clock::now() - start < 5s);
}

TEST_CASE("limits must be positive") {
  ResourceLimits l;
  l.wall_timeout = Seconds(0);
  CHECK_THROWS_AS(l.validate(), Error);
  CHECK(outcome_from_name(outcome_name(Outcome::kOutputTruncated)) == Outcome::kOutputTruncated);
}
