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

#include <sstream>

#include "cdp/jsonl.hpp"
#include "cdp/pipeline.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace cdp;
using cdp::testing::TempDir;
using nlohmann::json;

namespace {

struct Run {
  int status = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.status = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> base(const TempDir& dir) {
  return {"-c", (cdp::testing::micro_dir() / "cdp.conf").string(), "--out-dir", dir.path().string()};
}

Run step(const TempDir& dir, std::vector<std::string> extra) {
  auto args = base(dir);
  args.insert(args.end(), extra.begin(), extra.end());
  return cli(args);
}

}  // namespace

TEST_CASE("the micro pipeline runs end to end") {
  TempDir dir;
  for (const char* cmd : {"ingest", "split", "perceive", "optimize", "plan", "emit"}) {
    auto r = step(dir, {cmd});
    CAPTURE(cmd);
    CAPTURE(r.err);
    REQUIRE(r.status == 0);
  }
  // 10 training requirements, batch 4, 2 epochs.
  CHECK(read_jsonl(dir / kScheduleArtifact).size() == 6);
  CHECK(read_jsonl(dir / kTrainArtifact).size() == 10);
  CHECK(read_jsonl(dir / kValidationArtifact).size() == 2);
  CHECK(std::filesystem::exists(dir / kScheduleTextsArtifact));

  auto outcomes = read_jsonl(dir / kOptimizationArtifact);
  CHECK_FALSE(outcomes.empty());

  // Re-running a step is a no-op unless forced.
  const std::string schedule = read_file(dir / kScheduleArtifact);
  auto again = step(dir, {"emit"});
  CHECK(again.status == 0);
  CHECK(again.out.find("--force") != std::string::npos);
  CHECK(step(dir, {"--force", "emit"}).status == 0);
  CHECK(read_file(dir / kScheduleArtifact) == schedule);

  // A different batch seed changes the schedule; the same seed restores it.
  CHECK(step(dir, {"--force", "--seed", "5", "emit"}).status == 0);
  CHECK(read_file(dir / kScheduleArtifact) != schedule);
  CHECK(step(dir, {"--force", "--set", "curriculum.seed=0", "emit"}).status == 0);
  CHECK(read_file(dir / kScheduleArtifact) == schedule);

  auto eval = step(dir, {"evaluate"});
  CAPTURE(eval.err);
  CHECK(eval.status == 0);
  CHECK(eval.out.find("Pass@1") != std::string::npos);
  CHECK(std::filesystem::exists(dir / kEvalArtifact));
}

TEST_CASE("steps out of order name the missing producer") {
  TempDir dir;
  auto r = step(dir, {"emit"});
  CHECK(r.status != 0);
  auto err = json::parse(r.err);
  CHECK(err["error"] == "MissingArtifact");
  CHECK(err["message"].get<std::string>().find("cdp plan") != std::string::npos);
}

TEST_CASE("evaluate scores a results file") {
  TempDir dir;
  write_file(dir / "results.jsonl",
             "{\"requirement_id\": \"a\", \"n_generated\": 1, \"n_correct\": 1, \"best_pass_ratio\": 1.0}\n"
             "{\"requirement_id\": \"b\", \"n_generated\": 1, \"n_correct\": 0, \"best_pass_ratio\": 0.5}\n");
  auto r = step(dir, {"evaluate", "--results", (dir / "results.jsonl").string()});
  CAPTURE(r.err);
  CHECK(r.status == 0);
  CHECK(r.out.find("AvgPassRatio") != std::string::npos);
  CHECK(r.out.find("50.00%") != std::string::npos);
  CHECK(r.out.find("75.00%") != std::string::npos);
}

TEST_CASE("bad invocations fail with a JSON error line") {
  TempDir dir;
  auto unknown = step(dir, {"--set", "curriculum.lamda=1", "plan"});
  CHECK(unknown.status == 2);
  CHECK(json::parse(unknown.err)["error"] == "ConfigInvalid");
  CHECK(cli({}).status != 0);
  auto mix = step(dir, {"simulate", "--n", "30", "--mix", "1/2,1/2,1/2"});
  CHECK(mix.status == 2);
  CHECK(json::parse(mix.err)["error"] == "InvalidMix");
}

TEST_CASE("simulate writes traces and a summary") {
  TempDir dir;
  auto r = step(dir, {"simulate", "--n", "60", "--seeds", "2", "--batch-size", "8", "--series"});
  CAPTURE(r.err);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("staged") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "simulate" / "summary.json"));
  CHECK(std::filesystem::exists(dir / "simulate" / "smoothed-0.60_seed1.json"));
  CHECK(std::filesystem::exists(dir / "simulate" / "random_seed0.json"));
}
