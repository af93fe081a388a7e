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
#include <span>
#include <string>
#include <vector>

#include "cdp/corpus.hpp"
#include "cdp/generation.hpp"
#include "cdp/perception.hpp"
#include "cdp/rational.hpp"
#include "json.hpp"

namespace cdp {

struct ProblemResult {
  std::string requirement_id;
  int n_generated = 0;
  int n_correct = 0;
  // Best pass ratio over the generated candidates; crashed candidates score 0.
  Rational best_pass_ratio;
  std::string benchmark;
};

struct EvalReport {
  std::string benchmark;
  Rational pass_at_1;
  Rational avg_pass_ratio;
  std::vector<ProblemResult> per_problem;
};

// Fraction of problems with at least one correct candidate among exactly k.
// Throws Error{kInconsistentK} if any result has n_generated != k.
Rational solve_rate(std::span<const ProblemResult> results, int k);

// Unbiased pass@k estimate 1 - C(n-c, k) / C(n, k), evaluated as a running
// product so large n cannot overflow. Throws Error{kDomain} unless
// 0 <= c <= n and 1 <= k <= n.
double pass_at_k_estimator(int n, int c, int k);

// Throws Error{kEmptyReports} on empty input.
Rational avg_pass_ratio(std::span<const ProblemResult> results);

struct WilcoxonResult {
  // min(W+, W-) over the nonzero differences.
  double statistic = 0.0;
  double p_two_sided = 1.0;
  int n_nonzero = 0;
  bool exact = true;
};

// Paired two-sided signed-rank test. Zero differences are dropped and tied
// absolute differences share their average rank. Exact null distribution
// for up to kWilcoxonExactLimit nonzero pairs, tie-corrected normal
// approximation with continuity correction above.
inline constexpr int kWilcoxonExactLimit = 20;
WilcoxonResult wilcoxon_signed_rank(std::span<const double> paired_a, std::span<const double> paired_b);

// Generates k candidates per record with the backend and scores them.
std::vector<ProblemResult> evaluate_corpus(const std::vector<CorpusRecord>& records,
                                           const PerceptionOptions& options, Backend& backend,
                                           CandidateRunner& runner, const std::string& benchmark);

// One report per distinct benchmark label, in first-seen order. Requires
// every problem to carry the same n_generated (the k of solve_rate).
std::vector<EvalReport> build_reports(const std::vector<ProblemResult>& results);

nlohmann::json problem_to_json(const ProblemResult& r);
ProblemResult problem_from_json(const nlohmann::json& j);
std::vector<ProblemResult> load_results(const std::filesystem::path& path);
// Problem lines followed by one summary line per benchmark.
void save_reports(const std::filesystem::path& path, const std::vector<EvalReport>& reports);
std::string format_report_table(const std::vector<EvalReport>& reports);

}  // namespace cdp
