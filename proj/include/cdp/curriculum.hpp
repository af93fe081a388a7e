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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cdp/corpus.hpp"
#include "cdp/optimizer.hpp"
#include "cdp/perception.hpp"
#include "cdp/random.hpp"
#include "cdp/rational.hpp"
#include "json.hpp"

namespace cdp {

inline constexpr int kStages = 3;

struct SamplingConfig {
  // Share of each batch drawn from the current stage's cluster.
  double lambda = 0.6;
  int batch_size = 24;
  int epochs = 2;
  std::uint64_t seed = 0;

  void validate() const;
  // round-half-up of lambda * batch_size.
  int designated_count() const;
};

struct CurriculumPlan {
  // easy, medium, hard; each in ascending (rds, id) order.
  std::array<std::vector<std::string>, kStages> clusters;
  std::array<std::int64_t, kStages> stage_steps{};
  std::int64_t total_steps = 0;
  // Effective RDS of every training requirement.
  std::map<std::string, Rational> rds;

  // Training ids in ascending (rds, id) order.
  std::vector<std::string> all_ids() const;
  int stage_of(std::int64_t step) const;
};

enum class DrawProvenance { kDesignated, kUniform };

struct Draw {
  std::string requirement_id;
  DrawProvenance provenance = DrawProvenance::kUniform;
};

struct BatchManifest {
  std::int64_t step = 0;
  int stage = 0;
  std::vector<Draw> draws;
  Rational mean_rds;
};

// Clusters only. Sorted by (rds, requirement_id), cut into three contiguous
// runs whose sizes differ by at most one (extras go to earlier clusters).
// Throws Error{kEmptyCorpus}; skipped records violate the precondition.
CurriculumPlan partition_clusters(const std::vector<DifficultyRecord>& difficulty);

// total_steps = epochs * ceil(corpus_size / batch_size), split into three
// near-equal stage budgets with the remainder on earlier stages.
CurriculumPlan build_schedule(CurriculumPlan plan, std::int64_t corpus_size, const SamplingConfig& cfg);

// Designated draws come from the current cluster without replacement; a
// cluster smaller than the quota spills the deficit to uniform draws. Uniform
// draws cover the whole training set minus ids already in the batch. Each
// step has its own RNG stream derived from cfg.seed.
BatchManifest sample_batch(const CurriculumPlan& plan, const std::vector<std::string>& all_ids,
                           std::int64_t step, const SamplingConfig& cfg);

// Skipped records are dropped; accepted optimizations replace the RDS.
std::vector<DifficultyRecord> effective_difficulty(const std::vector<DifficultyRecord>& difficulty,
                                                   const std::vector<OptimizationOutcome>& outcomes);

std::map<std::string, std::string> effective_texts(const std::vector<CorpusRecord>& records,
                                                   const std::vector<OptimizationOutcome>& outcomes);

struct ScheduleFiles {
  std::filesystem::path schedule;  // one manifest per line
  std::filesystem::path texts;     // {id: effective text}
};

// Samples every step of the plan and writes both files. Same inputs and seed
// give byte-identical files.
std::vector<BatchManifest> emit_schedule(const CurriculumPlan& plan,
                                         const std::map<std::string, std::string>& texts,
                                         const SamplingConfig& cfg, const ScheduleFiles& files);

struct Smoothness {
  std::vector<double> per_step_mean_rds;
  double max_adjacent_delta = 0.0;
};

Smoothness trajectory_smoothness(const std::vector<BatchManifest>& manifests);

nlohmann::json manifest_to_json(const BatchManifest& manifest);
nlohmann::json plan_to_json(const CurriculumPlan& plan, const SamplingConfig& cfg);
CurriculumPlan plan_from_json(const nlohmann::json& j);

}  // namespace cdp
