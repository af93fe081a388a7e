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

#include "cdp/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <thread>

#include "cdp/error.hpp"
#include "cdp/jsonl.hpp"

namespace cdp {

using nlohmann::json;

Rational solve_rate(std::span<const ProblemResult> results, int k) {
  if (results.empty()) fail(ErrorCode::kEmptyReports, "solve_rate: no results");
  std::int64_t solved = 0;
  for (const auto& r : results) {
    if (r.n_generated != k) {
      fail(ErrorCode::kInconsistentK, "'" + r.requirement_id + "' has " + std::to_string(r.n_generated) +
                                          " candidates, expected k=" + std::to_string(k));
    }
    solved += r.n_correct >= 1 ? 1 : 0;
  }
  return {solved, static_cast<std::int64_t>(results.size())};
}

double pass_at_k_estimator(int n, int c, int k) {
  if (!(0 <= c && c <= n && 1 <= k && k <= n)) {
    fail(ErrorCode::kDomain, "pass_at_k_estimator: need 0 <= c <= n and 1 <= k <= n (n=" +
                                 std::to_string(n) + ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
  }
  if (n - c < k) return 1.0;
  // C(n-c, k) / C(n, k) = prod_{i=n-c+1}^{n} (1 - k / i)
  double miss = 1.0;
  for (int i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / i;
  return 1.0 - miss;
}

Rational avg_pass_ratio(std::span<const ProblemResult> results) {
  if (results.empty()) fail(ErrorCode::kEmptyReports, "avg_pass_ratio: no results");
  Rational sum;
  for (const auto& r : results) sum = sum + r.best_pass_ratio;
  return sum / Rational(static_cast<std::int64_t>(results.size()));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::kLengthMismatch, "wilcoxon_signed_rank: " + std::to_string(a.size()) + " vs " +
                                         std::to_string(b.size()) + " observations");
  }
  require(a.size() >= 2, "wilcoxon_signed_rank: need at least two pairs");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) fail(ErrorCode::kAllDifferencesZero, "wilcoxon_signed_rank: all differences are zero");
  const int n = static_cast<int>(diffs.size());

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return std::abs(diffs[static_cast<std::size_t>(x)]) < std::abs(diffs[static_cast<std::size_t>(y)]); });

  // Doubled ranks keep averaged tie ranks integral.
  std::vector<std::int64_t> rank2(static_cast<std::size_t>(n));
  double tie_term = 0.0;
  for (int i = 0; i < n;) {
    int j = i;
    const double mag = std::abs(diffs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    while (j < n && std::abs(diffs[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]) == mag) ++j;
    const std::int64_t shared = (i + 1) + j;  // 2 * average of ranks i+1..j
    for (int t = i; t < j; ++t) rank2[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = shared;
    const double t = j - i;
    tie_term += t * t * t - t;
    i = j;
  }

  std::int64_t w_plus2 = 0;
  std::int64_t total2 = 0;
  for (int i = 0; i < n; ++i) {
    total2 += rank2[static_cast<std::size_t>(i)];
    if (diffs[static_cast<std::size_t>(i)] > 0) w_plus2 += rank2[static_cast<std::size_t>(i)];
  }
  const std::int64_t stat2 = std::min(w_plus2, total2 - w_plus2);

  WilcoxonResult out;
  out.n_nonzero = n;
  out.statistic = static_cast<double>(stat2) / 2.0;

  if (n <= kWilcoxonExactLimit) {
    // counts[s] = number of sign assignments whose doubled W+ equals s.
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(total2) + 1, 0);
    counts[0] = 1;
    std::int64_t reach = 0;
    for (auto r : rank2) {
      for (std::int64_t s = reach; s >= 0; --s) {
        if (counts[static_cast<std::size_t>(s)] != 0) counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
      }
      reach += r;
    }
    std::uint64_t extreme = 0;
    for (std::int64_t s = 0; s <= total2; ++s) {
      if (std::min(s, total2 - s) <= stat2) extreme += counts[static_cast<std::size_t>(s)];
    }
    out.p_two_sided = std::min(1.0, static_cast<double>(extreme) / std::ldexp(1.0, n));
    out.exact = true;
  } else {
    const double nn = n;
    const double mean = nn * (nn + 1) / 4.0;
    const double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0;
    const double dev = std::max(0.0, std::abs(out.statistic - mean) - 0.5);
    out.p_two_sided = std::min(1.0, std::erfc(dev / std::sqrt(var) / std::sqrt(2.0)));
    out.exact = false;
  }
  return out;
}

std::vector<ProblemResult> evaluate_corpus(const std::vector<CorpusRecord>& records,
                                           const PerceptionOptions& options, Backend& backend,
                                           CandidateRunner& runner, const std::string& benchmark) {
  if (records.empty()) fail(ErrorCode::kEmptyReports, "evaluate_corpus: empty corpus");
  std::vector<ProblemResult> out(records.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < records.size();) {
      const auto& record = records[i];
      ProblemResult& result = out[i];
      result.requirement_id = record.requirement_id;
      result.benchmark = benchmark;
      result.n_generated = options.generation.n_samples;
      try {
        SampleRequest request{record.requirement_id, record.requirement_text, record.requirement_id,
                              options.prompt_template};
        for (const auto& c : sample_candidates(request, options.generation, backend)) {
          ExecutionReport report = runner.run(record, c);
          result.n_correct += report.all_passed ? 1 : 0;
          result.best_pass_ratio = std::max(result.best_pass_ratio, report.pass_ratio);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(options.parallelism, 1)), 1, records.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

std::vector<EvalReport> build_reports(const std::vector<ProblemResult>& results) {
  if (results.empty()) fail(ErrorCode::kEmptyReports, "build_reports: no results");
  std::vector<EvalReport> reports;
  std::map<std::string, std::size_t> index;
  for (const auto& r : results) {
    auto [it, inserted] = index.emplace(r.benchmark, reports.size());
    if (inserted) reports.push_back({r.benchmark, {}, {}, {}});
    reports[it->second].per_problem.push_back(r);
  }
  for (auto& rep : reports) {
    const int k = rep.per_problem.front().n_generated;
    rep.pass_at_1 = k == 1 ? solve_rate(rep.per_problem, 1) : [&] {
      // Unbiased pass@1 from n > 1 samples is the mean correct fraction.
      Rational sum;
      for (const auto& p : rep.per_problem) {
        if (p.n_generated != k) fail(ErrorCode::kInconsistentK, "mixed candidate counts in " + rep.benchmark);
        sum = sum + Rational(p.n_correct, p.n_generated);
      }
      return sum / Rational(static_cast<std::int64_t>(rep.per_problem.size()));
    }();
    rep.avg_pass_ratio = avg_pass_ratio(rep.per_problem);
  }
  return reports;
}

json problem_to_json(const ProblemResult& r) {
  return {{"kind", "problem"},
          {"requirement_id", r.requirement_id},
          {"benchmark", r.benchmark},
          {"n_generated", r.n_generated},
          {"n_correct", r.n_correct},
          {"best_pass_ratio", r.best_pass_ratio.to_double()},
          {"best_pass_ratio_exact", r.best_pass_ratio.to_string()}};
}

ProblemResult problem_from_json(const json& j) {
  ProblemResult r;
  r.requirement_id = j.at("requirement_id").get<std::string>();
  r.benchmark = j.value("benchmark", "default");
  r.n_generated = j.at("n_generated").get<int>();
  r.n_correct = j.at("n_correct").get<int>();
  if (r.n_generated < 1 || r.n_correct < 0 || r.n_correct > r.n_generated) {
    fail(ErrorCode::kMalformedRecord, "inconsistent counts for " + r.requirement_id);
  }
  if (j.contains("best_pass_ratio_exact")) {
    std::string s = j.at("best_pass_ratio_exact").get<std::string>();
    auto slash = s.find('/');
    r.best_pass_ratio = slash == std::string::npos
                            ? Rational(std::stoll(s))
                            : Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
  } else {
    // Decimal input: keep six digits of precision as an exact fraction.
    double v = j.at("best_pass_ratio").get<double>();
    r.best_pass_ratio = Rational(std::llround(v * 1'000'000), 1'000'000);
  }
  if (r.best_pass_ratio < Rational(0) || Rational(1) < r.best_pass_ratio) {
    fail(ErrorCode::kMalformedRecord, "best_pass_ratio outside [0, 1] for " + r.requirement_id);
  }
  return r;
}

std::vector<ProblemResult> load_results(const std::filesystem::path& path) {
  std::vector<ProblemResult> out;
  for (const auto& j : read_jsonl(path)) {
    if (j.value("kind", "problem") != "problem") continue;
    try {
      out.push_back(problem_from_json(j));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
    }
  }
  return out;
}

void save_reports(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  std::vector<json> lines;
  for (const auto& rep : reports) {
    for (const auto& p : rep.per_problem) lines.push_back(problem_to_json(p));
  }
  for (const auto& rep : reports) {
    lines.push_back({{"kind", "summary"},
                     {"benchmark", rep.benchmark},
                     {"problems", rep.per_problem.size()},
                     {"pass_at_1", rep.pass_at_1.to_double()},
                     {"avg_pass_ratio", rep.avg_pass_ratio.to_double()}});
  }
  write_jsonl(path, lines);
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-20s %9s %9s %14s\n", "benchmark", "problems", "Pass@1", "AvgPassRatio");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-20s %9zu %8.2f%% %13.2f%%\n", r.benchmark.c_str(),
                  r.per_problem.size(), 100.0 * r.pass_at_1.to_double(), 100.0 * r.avg_pass_ratio.to_double());
    out += line;
  }
  return out;
}

}  // namespace cdp
