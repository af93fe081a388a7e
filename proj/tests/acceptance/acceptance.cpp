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

// Acceptance checks. One line per criterion: "PASS <name>: ..." or
// "FAIL <name>: ...". With an argument only that criterion runs.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "cdp/curriculum.hpp"
#include "cdp/jsonl.hpp"
#include "cdp/metrics.hpp"
#include "cdp/optimizer.hpp"
#include "cdp/perception.hpp"
#include "cdp/pipeline.hpp"
#include "cdp/random.hpp"
#include "cdp/sandbox.hpp"
#include "cdp/simulator.hpp"
#include "support.hpp"

using namespace cdp;
using namespace cdp::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Upper tail of chi-square with k degrees of freedom (Wilson-Hilferty).
double chi_square_sf(double x, double k) {
  const double z = (std::cbrt(x / k) - (1.0 - 2.0 / (9.0 * k))) / std::sqrt(2.0 / (9.0 * k));
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// ids r000.. with ascending RDS, so sorted clusters are index ranges.
std::vector<DifficultyRecord> ladder(int n) {
  std::vector<DifficultyRecord> out;
  for (int i = 0; i < n; ++i) out.push_back(difficulty(fmt("r%03d", i), 16 - i * 17 / n));
  return out;
}

CurriculumPlan plan_for(int n, const SamplingConfig& cfg) {
  return build_schedule(partition_clusters(ladder(n)), n, cfg);
}

Result rds_correctness() {
  int bad = 0;
  Rng rng = make_stream(1);
  for (int c = 0; c <= 16; ++c) {
    std::vector<ExecutionReport> reports;
    for (int i = 0; i < 16; ++i) reports.push_back(report("p", i, i < c));
    for (int t = 0; t < 10; ++t) {
      shuffle(std::span<ExecutionReport>(reports), rng);
      auto d = compute_rds(reports);
      const Rational expected(16 - c, 16);
      if (d.rds != expected || d.resolved != (c > 0) || d.n_correct != c) ++bad;
      const bool challenging = !challenging_set({d}).empty();
      if (challenging != (c == 0)) ++bad;
    }
  }
  return {bad == 0, fmt("17 correct counts x 10 orders, %d mismatches", bad)};
}

// Subsets of size k out of n that include at least one of the first c.
double brute_pass_at_k(int n, int c, int k) {
  long hit = 0;
  long total = 0;
  for (unsigned mask = 0; mask < (1U << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    ++total;
    if ((mask & ((1U << c) - 1U)) != 0) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

Result pass_at_k_oracle() {
  double worst = 0.0;
  int cases = 0;
  for (int n = 1; n <= 12; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k, ++cases) {
        worst = std::max(worst, std::abs(pass_at_k_estimator(n, c, k) - brute_pass_at_k(n, c, k)));
      }
    }
  }
  return {worst <= 1e-12, fmt("%d (n, c, k) cases, max abs error %.3g", cases, worst)};
}

Result mixing_rate() {
  SamplingConfig cfg;
  cfg.lambda = 0.6;
  cfg.batch_size = 24;
  cfg.epochs = 770;  // 770 * ceil(300 / 24) = 10010 batches
  const int n = 300;
  CurriculumPlan plan = plan_for(n, cfg);
  const auto ids = plan.all_ids();
  long in_cluster = 0;
  long draws = 0;
  for (std::int64_t step = 0; step < plan.total_steps; ++step) {
    auto batch = sample_batch(plan, ids, step, cfg);
    const auto& cluster = plan.clusters[static_cast<std::size_t>(batch.stage)];
    for (const auto& d : batch.draws) {
      in_cluster += std::binary_search(cluster.begin(), cluster.end(), d.requirement_id) ? 1 : 0;
      ++draws;
    }
  }
  const double measured = static_cast<double>(in_cluster) / static_cast<double>(draws);
  // d = round(0.6 * 24) = 14 designated; the 10 uniform draws hit the 86
  // undrawn members of the cluster among 286 undrawn ids.
  const int d = cfg.designated_count();
  const double analytic = (d + (24.0 - d) * (100.0 - d) / (n - d)) / 24.0;
  const double target = 0.6 + 0.4 / 3.0;
  return {std::abs(measured - target) <= 0.01,
          fmt("%lld batches, measured %.4f, analytic %.4f, target %.4f +- 0.01", static_cast<long long>(plan.total_steps),
              measured, analytic, target)};
}

Result boundary_reductions() {
  // lambda = 0: inclusion counts against pure random 24-of-72 sampling.
  SamplingConfig zero;
  zero.lambda = 0.0;
  zero.batch_size = 24;
  zero.epochs = 3334;  // 3 batches per epoch
  CurriculumPlan plan = plan_for(72, zero);
  const auto ids = plan.all_ids();
  std::map<std::string, long> counts;
  bool structural = true;
  for (std::int64_t step = 0; step < plan.total_steps; ++step) {
    auto batch = sample_batch(plan, ids, step, zero);
    std::set<std::string> seen;
    for (const auto& d : batch.draws) {
      ++counts[d.requirement_id];
      structural = structural && d.provenance == DrawProvenance::kUniform && seen.insert(d.requirement_id).second;
    }
    structural = structural && batch.draws.size() == 24;
  }
  const double batches = static_cast<double>(plan.total_steps);
  const double p = 24.0 / 72.0;
  const double expected = batches * p;
  // Inclusion indicators of a without-replacement draw have covariance
  // p(1-p) T/(T-1) (I - J/T); scaling gives chi-square with T - 1 df.
  const double scale = batches * p * (1 - p) * 72.0 / 71.0;
  double chi = 0.0;
  for (const auto& id : ids) {
    const double o = static_cast<double>(counts[id]);
    chi += (o - expected) * (o - expected) / scale;
  }
  const double p_value = chi_square_sf(chi, 71.0);

  // lambda = 1: every draw comes from the current cluster.
  SamplingConfig one;
  one.lambda = 1.0;
  one.batch_size = 24;
  one.epochs = 40;
  CurriculumPlan staged = plan_for(90, one);
  const auto staged_ids = staged.all_ids();
  long outside = 0;
  for (std::int64_t step = 0; step < staged.total_steps; ++step) {
    auto batch = sample_batch(staged, staged_ids, step, one);
    const auto& cluster = staged.clusters[static_cast<std::size_t>(batch.stage)];
    for (const auto& d : batch.draws) {
      outside += std::binary_search(cluster.begin(), cluster.end(), d.requirement_id) ? 0 : 1;
    }
  }
  return {structural && p_value > 0.01 && outside == 0,
          fmt("lambda=0: %lld batches, chi2 %.1f on 71 df, p %.3f; lambda=1: %ld draws outside the cluster",
              static_cast<long long>(plan.total_steps), chi, p_value, outside)};
}

Result smoothness_ordering() {
  const auto start = Clock::now();
  const int seeds = 30;
  int smoother = 0;
  int richer = 0;
  std::vector<std::array<double, 4>> rows(seeds);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int s; (s = next.fetch_add(1)) < seeds;) {
      auto corpus = synthesize_corpus(300, static_cast<std::uint64_t>(s), {1.0 / 3, 1.0 / 3, 1.0 / 3});
      auto st = simulate(corpus, Policy::staged(), {}, false, static_cast<std::uint64_t>(s));
      auto sm = simulate(corpus, Policy::smoothed(0.6), {}, false, static_cast<std::uint64_t>(s));
      rows[static_cast<std::size_t>(s)] = {st.max_adjacent_delta, sm.max_adjacent_delta, st.stage_mean_reward(2),
                                           sm.stage_mean_reward(2)};
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < std::max(1U, std::thread::hardware_concurrency()); ++w) pool.emplace_back(work);
  }
  double mean[4] = {};
  for (const auto& r : rows) {
    smoother += r[1] < r[0] ? 1 : 0;
    richer += r[3] > r[2] ? 1 : 0;
    for (int i = 0; i < 4; ++i) mean[i] += r[i] / seeds;
  }
  const double elapsed = seconds_since(start);
  return {smoother >= 28 && richer >= 28 && elapsed < 120.0,
          fmt("smoother in %d/30 seeds (max delta %.3f vs %.3f), higher stage-2 reward in %d/30 (%.3f vs %.3f), "
              "%.1fs",
              smoother, mean[1], mean[0], richer, mean[3], mean[2], elapsed)};
}

Result utilization_gain() {
  SyntheticOptions options;
  options.bands[2] = Band{0.0, 0.0, 0.3};
  auto corpus = synthesize_corpus(300, 0, {0.3, 0.3, 0.4}, options);
  const double n = static_cast<double>(corpus.size());

  // A requirement gains iff all 16 base samples fail and at least one of
  // the 16 optimized samples passes; the two sample sets are independent.
  double analytic = 0.0;
  double variance = 0.0;
  for (const auto& r : corpus) {
    const double q = std::pow(1.0 - r.base_solve_prob, 16) * (1.0 - std::pow(1.0 - r.optimized_solve_prob, 16));
    analytic += q / n;
    variance += q * (1.0 - q) / (n * n);
  }

  const int seeds = 20;
  double mean = 0.0;
  for (int s = 0; s < seeds; ++s) {
    auto plain = simulate(corpus, Policy::smoothed(0.6), {}, false, static_cast<std::uint64_t>(s));
    auto optimized = simulate(corpus, Policy::smoothed(0.6), {}, true, static_cast<std::uint64_t>(s));
    mean += (optimized.utilization - plain.utilization) / seeds;
  }
  const double sigma = std::sqrt(variance / seeds);
  return {mean >= 0.15 && std::abs(mean - analytic) <= 3 * sigma,
          fmt("gain %.2f points over %d seeds, analytic %.2f, 3 sigma %.2f", 100 * mean, seeds, 100 * analytic,
              300 * sigma)};
}

std::string python_str(const std::string& s) { return "'" + s + "'"; }

// Leaves a background process behind in one of several ways.
std::string stress_program(int variant, const std::string& marker) {
  const std::string sleeper =
      "subprocess.Popen([sys.executable, '-c', 'import time; time.sleep(300)', " + python_str(marker) + "])\n";
  const std::string head = "import os, subprocess, sys, time\n";
  switch (variant % 5) {
    case 0: return head + sleeper + "print('done')\n";
    case 1: return head + sleeper + "while True:\n    pass\n";
    case 2:
      return head +
             "if os.fork() == 0:\n"
             "    os.setsid()\n"
             "    if os.fork() == 0:\n"
             "        os.execv(sys.executable, [sys.executable, '-c', 'import time; time.sleep(300)', " +
             python_str(marker) +
             "])\n"
             "    os._exit(0)\n"
             "time.sleep(0.2)\n";
    case 3: return head + sleeper + "while True:\n    print('x' * 1000)\n";
    default: return head + sleeper + "raise RuntimeError('boom')\n";
  }
}

int count_marked_processes(const std::string& marker) {
  int found = 0;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator("/proc", ec)) {
    std::ifstream in(entry.path() / "cmdline", std::ios::binary);
    std::string cmdline((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (cmdline.find(marker) != std::string::npos) ++found;
  }
  return found;
}

Result sandbox_contract() {
  const auto start = Clock::now();
  Sandbox sandbox;

  ResourceLimits generous;
  generous.wall_timeout = Seconds(10);
  int references = 0;
  int reference_failures = 0;
  for (const auto& record : load_corpus(micro_dir() / "corpus.jsonl")) {
    ++references;
    if (!sandbox.run_suite(record.reference_solution, record, generous).all_passed) ++reference_failures;
  }

  ResourceLimits short_limits;
  short_limits.wall_timeout = Seconds(1);
  GoldenTest test;
  test.test_id = "t";
  test.expected_output = "never";
  const auto t0 = Clock::now();
  auto verdict = sandbox.run_test("import time\nwhile True:\n    time.sleep(1)\n", test, short_limits);
  const double sleep_elapsed = seconds_since(t0);
  const bool timed_out = verdict.outcome == Outcome::kTimeout &&
                         sleep_elapsed <= (short_limits.wall_timeout + kSupervisionGrace).count();

  const std::string marker = fmt("cdp-orphan-probe-%d-%lld", static_cast<int>(::getpid()),
                                 static_cast<long long>(Clock::now().time_since_epoch().count()));
  std::atomic<int> next{0};
  std::atomic<int> errors{0};
  auto work = [&] {
    for (int i; (i = next.fetch_add(1)) < 50;) {
      try {
        sandbox.run_test(stress_program(i, marker), test, short_limits);
      } catch (const std::exception&) {
        ++errors;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < 4; ++w) pool.emplace_back(work);
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  const int orphans = count_marked_processes(marker);
  const double elapsed = seconds_since(start);

  return {reference_failures == 0 && timed_out && orphans == 0 && errors == 0 && elapsed < 60.0,
          fmt("%d/%d references pass, sleeper stopped after %.2fs (%s), %d orphans after 50 programs, %.1fs",
              references - reference_failures, references, sleep_elapsed,
              std::string(outcome_name(verdict.outcome)).c_str(), orphans, elapsed)};
}

bool run_pipeline(const TempDir& dir, std::string& error) {
  for (const char* cmd : {"ingest", "split", "perceive", "optimize", "plan", "emit"}) {
    std::ostringstream out;
    std::ostringstream err;
    const int status = run_cli({"-c", (micro_dir() / "cdp.conf").string(), "--out-dir", dir.path().string(), cmd},
                               out, err);
    if (status != 0) {
      error = std::string(cmd) + ": " + err.str();
      return false;
    }
  }
  return true;
}

Result end_to_end_determinism() {
  const auto start = Clock::now();
  TempDir a;
  TempDir b;
  std::string error;
  if (!run_pipeline(a, error) || !run_pipeline(b, error)) return {false, error};
  const double elapsed = seconds_since(start);
  const std::string sa = read_file(a / kScheduleArtifact);
  const bool same = sa == read_file(b / kScheduleArtifact) &&
                    read_file(a / kScheduleTextsArtifact) == read_file(b / kScheduleTextsArtifact);
  const auto lines = std::count(sa.begin(), sa.end(), '\n');
  return {same && !sa.empty() && elapsed < 30.0,
          fmt("schedules %s (%ld batches), two runs in %.1fs", same ? "byte-identical" : "differ",
              static_cast<long>(lines), elapsed)};
}

// Null distribution of W+ for n untied ranks, by enumerating sign vectors.
std::vector<long> signed_rank_counts(int n) {
  const int total = n * (n + 1) / 2;
  std::vector<long> counts(static_cast<std::size_t>(total) + 1, 0);
  for (unsigned mask = 0; mask < (1U << n); ++mask) {
    int w = 0;
    for (int i = 0; i < n; ++i) w += (mask >> i) & 1U ? i + 1 : 0;
    ++counts[static_cast<std::size_t>(w)];
  }
  return counts;
}

// Differences 1..n with the ranks of a subset summing to t made negative.
std::vector<double> with_negative_rank_sum(int n, int t) {
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = i + 1;
  for (int r = n; r >= 1 && t > 0; --r) {
    if (r <= t) {
      d[static_cast<std::size_t>(r - 1)] = -r;
      t -= r;
    }
  }
  return d;
}

Result wilcoxon_exactness() {
  const std::map<int, int> published = {{5, -1}, {6, 0}, {7, 2}, {8, 3}, {9, 5}, {10, 8}};
  std::vector<double> a = {1, 2, 3, 4, 5};
  std::vector<double> zero(5, 0.0);
  const double p5 = wilcoxon_signed_rank(a, zero).p_two_sided;
  bool ok = p5 == 0.0625;
  std::string table;
  for (const auto& [n, critical] : published) {
    const auto counts = signed_rank_counts(n);
    int oracle = -1;
    int implementation = -1;
    long cumulative = 0;
    for (int t = 0; t <= n * (n + 1) / 4; ++t) {
      cumulative += counts[static_cast<std::size_t>(t)];
      if (2.0 * static_cast<double>(cumulative) / std::ldexp(1.0, n) <= 0.05) oracle = t;
      const auto d = with_negative_rank_sum(n, t);
      const std::vector<double> zeros(d.size(), 0.0);
      auto r = wilcoxon_signed_rank(d, zeros);
      if (r.statistic != t) ok = false;
      if (r.p_two_sided <= 0.05) implementation = t;
    }
    ok = ok && oracle == critical && implementation == critical;
    table += fmt(" n=%d:%d", n, implementation);
  }
  return {ok, fmt("n=5 all positive p=%.4f; critical values%s", p5, table.c_str())};
}

Result retain_rule() {
  const AttributeSchema schema;
  const std::string sections = assemble_attributes(schema, {"explain", "concepts", "inputs", "outputs", "steps"});
  Rng rng = make_stream(2024);
  int checked = 0;
  int retained = 0;
  int violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(uniform_below(rng, 6));
    std::vector<CorpusRecord> records;
    std::vector<DifficultyRecord> diff;
    std::map<std::string, std::vector<std::string>> fixtures;
    for (int i = 0; i < n; ++i) {
      const std::string id = fmt("t%03d-%d", trial, i);
      records.push_back(make_record(id, "original " + id));
      const int c0 = uniform_below(rng, 5) < 3 ? 0 : static_cast<int>(uniform_below(rng, 17));
      diff.push_back(difficulty(id, c0));
      auto optimized = completions(16, static_cast<int>(uniform_below(rng, 17)));
      shuffle(std::span<std::string>(optimized), rng);
      fixtures[id + ".optimized"] = optimized;
      fixtures[optimize_fixture_key(id)] = {sections};
      fixtures[revise_fixture_key(id)] = {uniform_below(rng, 2) == 0 ? std::string("ISSUES: none")
                                                                      : "ISSUES: ambiguity\n\n" + sections};
    }
    StubBackend backend(fixtures);
    FakeRunner runner;
    OptimizeOptions options;
    options.perception.generation.n_samples = 16;
    options.include_non_challenging = uniform_below(rng, 2) == 0;
    auto outcomes = optimize_corpus(records, diff, options, backend, backend, runner);
    auto texts = effective_texts(records, outcomes);
    for (const auto& o : outcomes) {
      ++checked;
      const std::string original = "original " + o.requirement_id;
      const bool improved = o.optimized_rds < o.original_rds;
      if (!o.error.empty()) ++violations;
      if (!improved) {
        ++retained;
        if (o.effective_text != original || texts.at(o.requirement_id) != original ||
            o.decision != Decision::kRetainOriginal) {
          ++violations;
        }
      } else if (o.decision != Decision::kAcceptOptimized || texts.at(o.requirement_id) == original) {
        ++violations;
      }
    }
  }
  return {violations == 0 && retained > 0 && retained < checked,
          fmt("%d outcomes (%d retained), %d violations", checked, retained, violations)};
}

const std::vector<std::pair<std::string, std::function<Result()>>> kCriteria = {
    {"rds_correctness", rds_correctness},
    {"pass_at_k_oracle", pass_at_k_oracle},
    {"mixing_rate", mixing_rate},
    {"boundary_reductions", boundary_reductions},
    {"smoothness_ordering", smoothness_ordering},
    {"utilization_gain", utilization_gain},
    {"sandbox_contract", sandbox_contract},
    {"end_to_end_determinism", end_to_end_determinism},
    {"wilcoxon_exactness", wilcoxon_exactness},
    {"retain_rule", retain_rule},
};

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  int failures = 0;
  bool matched = false;
  for (const auto& [name, check] : kCriteria) {
    if (!only.empty() && name != only) continue;
    matched = true;
    Result result;
    try {
      result = check();
    } catch (const std::exception& e) {
      result = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (result.pass ? "PASS " : "FAIL ") << name << ": " << result.detail << std::endl;
    failures += result.pass ? 0 : 1;
  }
  if (!matched) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
