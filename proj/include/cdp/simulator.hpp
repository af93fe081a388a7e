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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdp/curriculum.hpp"
#include "cdp/perception.hpp"

namespace cdp {

struct SyntheticRequirement {
  std::string requirement_id;
  double base_solve_prob = 0.0;
  double optimized_solve_prob = 0.0;
};

// Solve probabilities of one difficulty band are drawn uniformly from
// [lo, hi]. When `optimized` is set, the band's optimized probability is
// max(base, *optimized); otherwise optimization does not help.
struct Band {
  double lo = 0.0;
  double hi = 0.0;
  std::optional<double> optimized;
};

struct SyntheticOptions {
  std::array<Band, 3> bands = {Band{0.6, 0.95, {}}, Band{0.2, 0.5, {}}, Band{0.0, 0.02, {}}};
};

// Band sizes follow `mix` by largest remainder. Throws Error{kInvalidMix}
// for negative ratios or ratios not summing to 1.
std::vector<SyntheticRequirement> synthesize_corpus(int n, std::uint64_t seed,
                                                    const std::array<double, 3>& mix,
                                                    const SyntheticOptions& options = {});

struct Policy {
  enum class Kind { kRandom, kStaged, kSmoothed };
  Kind kind = Kind::kSmoothed;
  double lambda = 0.6;

  static Policy random() { return {Kind::kRandom, 0.0}; }
  static Policy staged() { return {Kind::kStaged, 1.0}; }
  static Policy smoothed(double lambda) { return {Kind::kSmoothed, lambda}; }
  double effective_lambda() const;
  std::string name() const;
};

struct SimulationTrace {
  std::vector<double> per_step_reward;
  std::vector<double> per_step_mean_rds;
  std::vector<int> per_step_stage;
  double utilization = 0.0;
  double max_adjacent_delta = 0.0;
  int accepted_optimizations = 0;

  // Mean reward over the steps of one stage; NaN if the stage has no steps.
  double stage_mean_reward(int stage) const;
};

struct SimulationOptions {
  int n_samples = 16;
  int parallelism = 1;
};

// Perception, optimization acceptance and batch sampling run through the
// production code paths; only candidate execution is replaced by Bernoulli
// draws with the synthetic solve probabilities.
SimulationTrace simulate(const std::vector<SyntheticRequirement>& corpus, const Policy& policy,
                         SamplingConfig cfg, bool with_optimization, std::uint64_t seed,
                         const SimulationOptions& options = {});

nlohmann::json trace_to_json(const SimulationTrace& trace);

}  // namespace cdp
