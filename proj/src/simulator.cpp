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

#include "cdp/simulator.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "cdp/error.hpp"
#include "cdp/random.hpp"

namespace cdp {
namespace {

constexpr std::string_view kBaseMarker = "synthetic:base";
constexpr std::string_view kOptimizedMarker = "synthetic:optimized";

// Returns one marker completion per sample; the marker tells the runner which
// solve probability applies.
class SyntheticBackend : public Backend {
 public:
  std::vector<std::string> complete(const CompletionRequest& request) override {
    const bool optimized = request.fixture_key.ends_with(".optimized");
    return std::vector<std::string>(static_cast<std::size_t>(request.n),
                                    std::string(optimized ? kOptimizedMarker : kBaseMarker));
  }
  std::string fingerprint() const override { return "synthetic"; }
};

class BernoulliRunner : public CandidateRunner {
 public:
  BernoulliRunner(const std::vector<SyntheticRequirement>& corpus, std::uint64_t seed) : seed_(seed) {
    for (const auto& r : corpus) probs_[r.requirement_id] = &r;
  }

  ExecutionReport run(const CorpusRecord& record, const CandidateCode& candidate) override {
    const SyntheticRequirement& req = *probs_.at(record.requirement_id);
    const bool optimized = candidate.extracted_source == kOptimizedMarker;
    const double p = optimized ? req.optimized_solve_prob : req.base_solve_prob;
    Rng rng = make_stream(seed_, fnv1a("perceive"), fnv1a(record.requirement_id),
                          static_cast<std::uint64_t>(candidate.candidate_index), optimized ? 1U : 0U);
    ExecutionReport report;
    report.requirement_id = record.requirement_id;
    report.candidate_index = candidate.candidate_index;
    TestVerdict v;
    v.test_id = record.tests.front().test_id;
    v.outcome = bernoulli(rng, p) ? Outcome::kPass : Outcome::kWrongOutput;
    report.verdicts.push_back(std::move(v));
    report.finalize();
    return report;
  }
  std::string fingerprint() const override { return "bernoulli"; }

 private:
  std::uint64_t seed_;
  std::map<std::string, const SyntheticRequirement*> probs_;
};

CorpusRecord as_record(const SyntheticRequirement& r) {
  CorpusRecord rec;
  rec.requirement_id = r.requirement_id;
  rec.requirement_text = "synthetic requirement " + r.requirement_id;
  rec.reference_solution = "pass";
  GoldenTest t;
  t.test_id = "t0";
  rec.tests.push_back(std::move(t));
  return rec;
}

}  // namespace

std::vector<SyntheticRequirement> synthesize_corpus(int n, std::uint64_t seed,
                                                    const std::array<double, 3>& mix,
                                                    const SyntheticOptions& options) {
  require(n >= 3, "synthesize_corpus: need at least 3 requirements");
  double sum = 0.0;
  for (double r : mix) {
    if (!(r >= 0.0)) fail(ErrorCode::kInvalidMix, "difficulty mix ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidMix, "difficulty mix ratios sum to " + std::to_string(sum) + ", not 1");
  }
  for (const auto& b : options.bands) {
    require(0.0 <= b.lo && b.lo <= b.hi && b.hi <= 1.0, "synthesize_corpus: band bounds outside [0, 1]");
  }

  // Largest-remainder allocation; ties favour earlier bands.
  std::array<int, 3> counts{};
  std::array<double, 3> frac{};
  int assigned = 0;
  for (int b = 0; b < 3; ++b) {
    double exact = mix[b] * n;
    counts[b] = static_cast<int>(std::floor(exact));
    frac[b] = exact - counts[b];
    assigned += counts[b];
  }
  for (int left = n - assigned; left > 0; --left) {
    int best = 0;
    for (int b = 1; b < 3; ++b) {
      if (frac[b] > frac[best] + 1e-12) best = b;
    }
    ++counts[best];
    frac[best] = -1.0;
  }

  std::vector<SyntheticRequirement> out;
  out.reserve(static_cast<std::size_t>(n));
  int index = 0;
  for (int b = 0; b < 3; ++b) {
    const Band& band = options.bands[b];
    for (int i = 0; i < counts[b]; ++i, ++index) {
      Rng rng = make_stream(seed, fnv1a("synthesize"), static_cast<std::uint64_t>(index));
      SyntheticRequirement r;
      char id[32];
      std::snprintf(id, sizeof(id), "syn-%05d", index);
      r.requirement_id = id;
      r.base_solve_prob = band.lo + (band.hi - band.lo) * uniform_unit(rng);
      r.optimized_solve_prob = band.optimized ? std::max(r.base_solve_prob, *band.optimized) : r.base_solve_prob;
      out.push_back(std::move(r));
    }
  }
  return out;
}

double Policy::effective_lambda() const {
  switch (kind) {
    case Kind::kRandom: return 0.0;
    case Kind::kStaged: return 1.0;
    case Kind::kSmoothed: return lambda;
  }
  return lambda;
}

std::string Policy::name() const {
  switch (kind) {
    case Kind::kRandom: return "random";
    case Kind::kStaged: return "staged";
    case Kind::kSmoothed: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "smoothed(%.2f)", lambda);
      return buf;
    }
  }
  return "unknown";
}

double SimulationTrace::stage_mean_reward(int stage) const {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < per_step_reward.size(); ++i) {
    if (per_step_stage[i] == stage) {
      sum += per_step_reward[i];
      ++count;
    }
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / count;
}

SimulationTrace simulate(const std::vector<SyntheticRequirement>& corpus, const Policy& policy,
                         SamplingConfig cfg, bool with_optimization, std::uint64_t seed,
                         const SimulationOptions& options) {
  require(!corpus.empty(), "simulate: empty corpus");
  for (const auto& r : corpus) {
    require(0.0 <= r.base_solve_prob && r.base_solve_prob <= r.optimized_solve_prob &&
                r.optimized_solve_prob <= 1.0,
            "simulate: invalid solve probabilities for '" + r.requirement_id + "'");
  }
  cfg.lambda = policy.effective_lambda();
  cfg.seed = seed;

  std::vector<CorpusRecord> records;
  records.reserve(corpus.size());
  for (const auto& r : corpus) records.push_back(as_record(r));

  SyntheticBackend backend;
  BernoulliRunner runner(corpus, seed);
  PerceptionOptions perception;
  perception.generation.n_samples = options.n_samples;
  perception.parallelism = options.parallelism;
  std::vector<DifficultyRecord> difficulty = perceive_corpus(records, perception, backend, runner);

  std::vector<OptimizationOutcome> outcomes;
  if (with_optimization) {
    for (const auto& id : challenging_set(difficulty)) {
      const CorpusRecord& record = *find_record(records, id);
      const DifficultyRecord& original =
          *std::find_if(difficulty.begin(), difficulty.end(),
                        [&](const DifficultyRecord& d) { return d.requirement_id == id; });
      OptimizedRequirement revised;
      revised.requirement_id = id;
      revised.final_text = "optimized " + record.requirement_text;
      revised.provenance = Provenance::kRevised;
      outcomes.push_back(accept_or_retain(record, revised, original, perception, backend, runner));
    }
  }

  SimulationTrace trace;
  std::map<std::string, double> effective_prob;
  for (const auto& r : corpus) effective_prob[r.requirement_id] = r.base_solve_prob;
  for (const auto& o : outcomes) {
    if (o.decision == Decision::kAcceptOptimized) {
      ++trace.accepted_optimizations;
      for (const auto& r : corpus) {
        if (r.requirement_id == o.requirement_id) effective_prob[r.requirement_id] = r.optimized_solve_prob;
      }
    }
  }

  std::vector<DifficultyRecord> effective = effective_difficulty(difficulty, outcomes);
  trace.utilization = learning_utilization_rate(effective).to_double();

  CurriculumPlan plan =
      build_schedule(partition_clusters(effective), static_cast<std::int64_t>(effective.size()), cfg);
  const std::vector<std::string> ids = plan.all_ids();
  std::vector<BatchManifest> manifests;
  for (std::int64_t step = 0; step < plan.total_steps; ++step) {
    BatchManifest batch = sample_batch(plan, ids, step, cfg);
    Rng rng = make_stream(seed, fnv1a("reward"), static_cast<std::uint64_t>(step));
    int solved = 0;
    for (const auto& d : batch.draws) solved += bernoulli(rng, effective_prob.at(d.requirement_id)) ? 1 : 0;
    trace.per_step_reward.push_back(static_cast<double>(solved) / static_cast<double>(batch.draws.size()));
    trace.per_step_stage.push_back(batch.stage);
    manifests.push_back(std::move(batch));
  }
  Smoothness smooth = trajectory_smoothness(manifests);
  trace.per_step_mean_rds = std::move(smooth.per_step_mean_rds);
  trace.max_adjacent_delta = smooth.max_adjacent_delta;
  return trace;
}

nlohmann::json trace_to_json(const SimulationTrace& trace) {
  return {{"per_step_reward", trace.per_step_reward},
          {"per_step_mean_rds", trace.per_step_mean_rds},
          {"per_step_stage", trace.per_step_stage},
          {"utilization", trace.utilization},
          {"max_adjacent_delta", trace.max_adjacent_delta},
          {"accepted_optimizations", trace.accepted_optimizations}};
}

}  // namespace cdp
