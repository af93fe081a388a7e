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

#include <algorithm>
#include <bit>
#include <functional>
#include <cmath>
#include <numeric>

#include "cdp/error.hpp"
#include "cdp/jsonl.hpp"
#include "cdp/metrics.hpp"
#include "cdp/random.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cdp;
using cdp::testing::TempDir;

namespace {

ProblemResult result(const std::string& id, int n, int c, Rational best = Rational(0),
                     const std::string& bench = "b") {
  ProblemResult r;
  r.requirement_id = id;
  r.n_generated = n;
  r.n_correct = c;
  r.best_pass_ratio = best;
  r.benchmark = bench;
  return r;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kIo;
}

// Counts k-subsets of n candidates (c correct) that contain a correct one.
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

// Two-sided signed-rank p by enumerating every sign assignment.
double brute_wilcoxon_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0;
    double equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++below;
      if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    rank[i] = below + (equal + 1) / 2.0;
  }
  const double total = std::accumulate(rank.begin(), rank.end(), 0.0);
  double observed = 0;
  for (std::size_t i = 0; i < n; ++i) observed += d[i] > 0 ? rank[i] : 0.0;
  observed = std::min(observed, total - observed);
  long extreme = 0;
  for (unsigned mask = 0; mask < (1U << n); ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) w += (mask >> i) & 1U ? rank[i] : 0.0;
    if (std::min(w, total - w) <= observed + 1e-9) ++extreme;
  }
  return std::min(1.0, static_cast<double>(extreme) / std::ldexp(1.0, static_cast<int>(n)));
}

}  // namespace

TEST_CASE("solve_rate examples") {
  std::vector<ProblemResult> rs = {result("a", 1, 1), result("b", 1, 0), result("c", 1, 1), result("d", 1, 0)};
  CHECK(solve_rate(rs, 1) == Rational(1, 2));
  CHECK(solve_rate(std::vector<ProblemResult>{result("a", 5, 5), result("b", 5, 1)}, 5) == Rational(1));
  CHECK(code_of([&] { solve_rate(rs, 2); }) == ErrorCode::kInconsistentK);
  CHECK(code_of([] { solve_rate({}, 1); }) == ErrorCode::kEmptyReports);
}

TEST_CASE("pass_at_k examples and domain") {
  CHECK(pass_at_k_estimator(5, 0, 1) == 0.0);
  CHECK(pass_at_k_estimator(5, 5, 3) == 1.0);
  CHECK(pass_at_k_estimator(5, 2, 2) == doctest::Approx(0.7));
  CHECK(pass_at_k_estimator(16, 4, 1) == doctest::Approx(0.25));
  CHECK(code_of([] { pass_at_k_estimator(5, 6, 1); }) == ErrorCode::kDomain);
  CHECK(code_of([] { pass_at_k_estimator(5, 1, 0); }) == ErrorCode::kDomain);
  CHECK(code_of([] { pass_at_k_estimator(5, 1, 6); }) == ErrorCode::kDomain);
  CHECK(code_of([] { pass_at_k_estimator(5, -1, 1); }) == ErrorCode::kDomain);
  // Large n stays finite.
  const double big = pass_at_k_estimator(100000, 10, 500);
  CHECK(std::isfinite(big));
  CHECK(big > 0.0);
  CHECK(big < 1.0);
}

TEST_CASE("pass_at_k matches subset enumeration") {
  for (int n = 1; n <= 10; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        CHECK(std::abs(pass_at_k_estimator(n, c, k) - brute_pass_at_k(n, c, k)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("pass_at_k is monotone in c and k") {
  for (int n = 1; n <= 20; ++n) {
    for (int k = 1; k <= n; ++k) {
      for (int c = 1; c <= n; ++c) CHECK(pass_at_k_estimator(n, c, k) >= pass_at_k_estimator(n, c - 1, k));
    }
    for (int c = 0; c <= n; ++c) {
      for (int k = 2; k <= n; ++k) CHECK(pass_at_k_estimator(n, c, k) >= pass_at_k_estimator(n, c, k - 1));
    }
  }
}

TEST_CASE("avg_pass_ratio examples") {
  std::vector<ProblemResult> rs = {result("a", 1, 1, Rational(1)), result("b", 1, 0, Rational(1, 2)),
                                   result("c", 1, 0, Rational(0))};
  CHECK(avg_pass_ratio(rs) == Rational(1, 2));
  CHECK(code_of([] { avg_pass_ratio({}); }) == ErrorCode::kEmptyReports);
}

TEST_CASE("wilcoxon examples") {
  std::vector<double> a = {1, 2, 3, 4, 5};
  std::vector<double> zero(5, 0.0);
  auto all_positive = wilcoxon_signed_rank(a, zero);
  CHECK(all_positive.p_two_sided == doctest::Approx(0.0625));
  CHECK(all_positive.statistic == 0.0);
  CHECK(all_positive.n_nonzero == 5);
  CHECK(all_positive.exact);

  std::vector<double> x = {1, -1};
  std::vector<double> z = {0, 0};
  CHECK(wilcoxon_signed_rank(x, z).p_two_sided == doctest::Approx(1.0));

  // Zero differences are dropped.
  std::vector<double> c = {1, 2, 3, 4, 5, 7};
  std::vector<double> d = {0, 0, 0, 0, 0, 7};
  CHECK(wilcoxon_signed_rank(c, d).n_nonzero == 5);

  CHECK(code_of([&] { wilcoxon_signed_rank(a, a); }) == ErrorCode::kAllDifferencesZero);
  CHECK(code_of([&] { wilcoxon_signed_rank(a, z); }) == ErrorCode::kLengthMismatch);
}

TEST_CASE("wilcoxon agrees with sign enumeration, ties included") {
  Rng rng = make_stream(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(uniform_below(rng, 11));
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (int i = 0; i < n; ++i) {
      // Small integer range forces ties and zeros.
      a[i] = static_cast<double>(uniform_below(rng, 5));
      b[i] = static_cast<double>(uniform_below(rng, 5));
    }
    if (a == b) continue;
    bool any = false;
    for (int i = 0; i < n; ++i) any = any || a[i] != b[i];
    if (!any) continue;
    auto got = wilcoxon_signed_rank(a, b);
    CHECK(got.p_two_sided == doctest::Approx(brute_wilcoxon_p(a, b)).epsilon(1e-12));
    CHECK(wilcoxon_signed_rank(b, a).p_two_sided == doctest::Approx(got.p_two_sided).epsilon(1e-12));
  }
}

TEST_CASE("wilcoxon falls back to the normal approximation for large n") {
  std::vector<double> a(25);
  std::vector<double> b(25, 0.0);
  std::iota(a.begin(), a.end(), 1.0);
  auto r = wilcoxon_signed_rank(a, b);
  CHECK_FALSE(r.exact);
  // mean 162.5, sd sqrt(1381.25); z = -162/37.165 -> p ~ 1.31e-5.
  const double expected = std::erfc(162.0 / std::sqrt(1381.25) / std::sqrt(2.0));
  CHECK(r.p_two_sided == doctest::Approx(expected));
  CHECK(r.p_two_sided > 1e-5);
  CHECK(r.p_two_sided < 2e-5);
}

TEST_CASE("build_reports groups by benchmark") {
  std::vector<ProblemResult> rs = {result("a", 1, 1, Rational(1), "x"), result("b", 1, 0, Rational(1, 2), "y"),
                                   result("c", 1, 0, Rational(0), "x")};
  auto reports = build_reports(rs);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].benchmark == "x");
  CHECK(reports[0].pass_at_1 == Rational(1, 2));
  CHECK(reports[0].avg_pass_ratio == Rational(1, 2));
  CHECK(reports[1].pass_at_1 == Rational(0));

  // With more than one sample, pass@1 is the mean correct fraction.
  auto multi = build_reports({result("a", 4, 1), result("b", 4, 4)});
  CHECK(multi[0].pass_at_1 == Rational(5, 8));
  CHECK(code_of([] { build_reports({result("a", 4, 1), result("b", 2, 1)}); }) == ErrorCode::kInconsistentK);
  CHECK(code_of([] { build_reports({}); }) == ErrorCode::kEmptyReports);
}

TEST_CASE("results and reports round trip through files") {
  TempDir dir;
  auto reports = build_reports({result("a", 1, 1, Rational(1)), result("b", 1, 0, Rational(2, 3))});
  save_reports(dir / "eval.jsonl", reports);
  auto back = load_results(dir / "eval.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[1].best_pass_ratio == Rational(2, 3));
  CHECK(back[1].benchmark == "b");

  write_file(dir / "plain.jsonl",
             "{\"requirement_id\": \"p\", \"n_generated\": 1, \"n_correct\": 0, \"best_pass_ratio\": 0.25}\n");
  CHECK(load_results(dir / "plain.jsonl")[0].best_pass_ratio == Rational(1, 4));
  write_file(dir / "bad.jsonl", "{\"requirement_id\": \"p\", \"n_generated\": 1, \"n_correct\": 2}\n");
  CHECK(code_of([&] { load_results(dir / "bad.jsonl"); }) == ErrorCode::kMalformedRecord);

  const std::string table = format_report_table(reports);
  CHECK(table.find("Pass@1") != std::string::npos);
  CHECK(table.find("AvgPassRatio") != std::string::npos);
  CHECK(table.find("50.00") != std::string::npos);
}
