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

#include "cdp/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cdp/error.hpp"
#include "cdp/jsonl.hpp"

namespace cdp {
namespace {

using nlohmann::json;

// Splits `total` into three contiguous parts differing by at most one, the
// remainder going to the front.
std::array<std::int64_t, kStages> split_three(std::int64_t total) {
  std::array<std::int64_t, kStages> parts{};
  for (int k = 0; k < kStages; ++k) parts[k] = total / kStages + (k < total % kStages ? 1 : 0);
  return parts;
}

Rational rational_from_string(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rational(std::stoll(s));
  return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

}  // namespace

void SamplingConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorCode::kConfigInvalid, "lambda must lie in [0, 1]");
  if (batch_size < 1) fail(ErrorCode::kConfigInvalid, "batch_size must be >= 1");
  if (epochs < 1) fail(ErrorCode::kConfigInvalid, "epochs must be >= 1");
}

int SamplingConfig::designated_count() const {
  return static_cast<int>(std::floor(lambda * batch_size + 0.5));
}

std::vector<std::string> CurriculumPlan::all_ids() const {
  std::vector<std::string> ids;
  for (const auto& c : clusters) ids.insert(ids.end(), c.begin(), c.end());
  return ids;
}

int CurriculumPlan::stage_of(std::int64_t step) const {
  std::int64_t end = 0;
  for (int k = 0; k < kStages; ++k) {
    end += stage_steps[k];
    if (step < end) return k;
  }
  fail(ErrorCode::kPrecondition,
       "step " + std::to_string(step) + " outside schedule of " + std::to_string(total_steps) + " steps");
}

CurriculumPlan partition_clusters(const std::vector<DifficultyRecord>& difficulty) {
  if (difficulty.empty()) fail(ErrorCode::kEmptyCorpus, "partition_clusters: no difficulty records");
  std::vector<const DifficultyRecord*> sorted;
  std::set<std::string> seen;
  for (const auto& d : difficulty) {
    require(d.status == RecordStatus::kOk,
            "partition_clusters: '" + d.requirement_id + "' was skipped during perception");
    require(seen.insert(d.requirement_id).second,
            "partition_clusters: duplicate id '" + d.requirement_id + "'");
    sorted.push_back(&d);
  }
  std::sort(sorted.begin(), sorted.end(), [](const DifficultyRecord* a, const DifficultyRecord* b) {
    if (a->rds != b->rds) return a->rds < b->rds;
    return a->requirement_id < b->requirement_id;
  });

  CurriculumPlan plan;
  auto sizes = split_three(static_cast<std::int64_t>(sorted.size()));
  std::size_t pos = 0;
  for (int k = 0; k < kStages; ++k) {
    for (std::int64_t i = 0; i < sizes[k]; ++i, ++pos) {
      plan.clusters[k].push_back(sorted[pos]->requirement_id);
      plan.rds[sorted[pos]->requirement_id] = sorted[pos]->rds;
    }
  }
  return plan;
}

CurriculumPlan build_schedule(CurriculumPlan plan, std::int64_t corpus_size, const SamplingConfig& cfg) {
  require(corpus_size >= 1, "build_schedule: corpus_size must be >= 1");
  cfg.validate();
  const std::int64_t per_epoch = (corpus_size + cfg.batch_size - 1) / cfg.batch_size;
  plan.total_steps = cfg.epochs * per_epoch;
  plan.stage_steps = split_three(plan.total_steps);
  return plan;
}

BatchManifest sample_batch(const CurriculumPlan& plan, const std::vector<std::string>& all_ids,
                           std::int64_t step, const SamplingConfig& cfg) {
  cfg.validate();
  require(step >= 0 && step < plan.total_steps,
          "sample_batch: step " + std::to_string(step) + " not below total_steps " +
              std::to_string(plan.total_steps));
  if (static_cast<std::size_t>(cfg.batch_size) > all_ids.size()) {
    fail(ErrorCode::kBatchLargerThanCorpus,
         "batch_size " + std::to_string(cfg.batch_size) + " exceeds training set of " +
             std::to_string(all_ids.size()));
  }

  BatchManifest batch;
  batch.step = step;
  batch.stage = plan.stage_of(step);
  Rng rng = make_stream(cfg.seed, fnv1a("batch"), static_cast<std::uint64_t>(step));

  const auto& cluster = plan.clusters[batch.stage];
  const std::size_t quota = static_cast<std::size_t>(cfg.designated_count());
  std::vector<std::string> designated = sample_without_replacement(cluster, quota, rng);

  std::set<std::string> drawn(designated.begin(), designated.end());
  std::vector<std::string> pool;
  pool.reserve(all_ids.size());
  for (const auto& id : all_ids) {
    if (!drawn.contains(id)) pool.push_back(id);
  }
  const std::size_t n_uniform = static_cast<std::size_t>(cfg.batch_size) - designated.size();
  std::vector<std::string> uniform = sample_without_replacement(std::move(pool), n_uniform, rng);

  Rational total;
  for (auto& id : designated) batch.draws.push_back({std::move(id), DrawProvenance::kDesignated});
  for (auto& id : uniform) batch.draws.push_back({std::move(id), DrawProvenance::kUniform});
  for (const auto& d : batch.draws) {
    auto it = plan.rds.find(d.requirement_id);
    require(it != plan.rds.end(), "sample_batch: no RDS for '" + d.requirement_id + "'");
    total = total + it->second;
  }
  batch.mean_rds = total / Rational(cfg.batch_size);
  return batch;
}

std::vector<DifficultyRecord> effective_difficulty(const std::vector<DifficultyRecord>& difficulty,
                                                   const std::vector<OptimizationOutcome>& outcomes) {
  std::map<std::string, const OptimizationOutcome*> accepted;
  for (const auto& o : outcomes) {
    if (o.decision == Decision::kAcceptOptimized) accepted[o.requirement_id] = &o;
  }
  std::vector<DifficultyRecord> out;
  for (const auto& d : difficulty) {
    if (d.status != RecordStatus::kOk) continue;
    DifficultyRecord e = d;
    if (auto it = accepted.find(d.requirement_id); it != accepted.end()) {
      e.rds = it->second->optimized_rds;
      // n_correct follows from the new rds at the same sample count.
      Rational correct = (Rational(1) - e.rds) * Rational(e.n_samples);
      e.n_correct = static_cast<int>(correct.num() / correct.den());
      e.resolved = e.rds < Rational(1);
      e.per_candidate.clear();
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::map<std::string, std::string> effective_texts(const std::vector<CorpusRecord>& records,
                                                   const std::vector<OptimizationOutcome>& outcomes) {
  std::map<std::string, std::string> texts;
  for (const auto& r : records) texts[r.requirement_id] = r.requirement_text;
  for (const auto& o : outcomes) {
    if (o.decision == Decision::kAcceptOptimized && texts.contains(o.requirement_id)) {
      texts[o.requirement_id] = o.effective_text;
    }
  }
  return texts;
}

std::vector<BatchManifest> emit_schedule(const CurriculumPlan& plan,
                                         const std::map<std::string, std::string>& texts,
                                         const SamplingConfig& cfg, const ScheduleFiles& files) {
  const std::vector<std::string> ids = plan.all_ids();
  std::vector<BatchManifest> manifests;
  std::vector<json> lines;
  json sidecar = json::object();
  for (const auto& id : ids) {
    auto it = texts.find(id);
    require(it != texts.end(), "emit_schedule: no requirement text for '" + id + "'");
    sidecar[id] = it->second;
  }
  for (std::int64_t step = 0; step < plan.total_steps; ++step) {
    manifests.push_back(sample_batch(plan, ids, step, cfg));
    lines.push_back(manifest_to_json(manifests.back()));
  }
  write_jsonl(files.schedule, lines);
  write_file(files.texts, sidecar.dump(1) + "\n");
  return manifests;
}

Smoothness trajectory_smoothness(const std::vector<BatchManifest>& manifests) {
  Smoothness out;
  for (const auto& m : manifests) out.per_step_mean_rds.push_back(m.mean_rds.to_double());
  for (std::size_t i = 1; i < manifests.size(); ++i) {
    double delta = std::abs((manifests[i].mean_rds - manifests[i - 1].mean_rds).to_double());
    out.max_adjacent_delta = std::max(out.max_adjacent_delta, delta);
  }
  return out;
}

json manifest_to_json(const BatchManifest& m) {
  json draws = json::array();
  for (const auto& d : m.draws) {
    draws.push_back({{"id", d.requirement_id},
                     {"provenance", d.provenance == DrawProvenance::kDesignated ? "designated" : "uniform"}});
  }
  return {{"step", m.step},
          {"stage", m.stage},
          {"draws", std::move(draws)},
          {"mean_rds", m.mean_rds.to_double()}};
}

json plan_to_json(const CurriculumPlan& plan, const SamplingConfig& cfg) {
  json rds = json::object();
  for (const auto& [id, r] : plan.rds) rds[id] = r.to_string();
  return {{"clusters", plan.clusters},
          {"stage_steps", plan.stage_steps},
          {"total_steps", plan.total_steps},
          {"rds", std::move(rds)},
          {"sampling",
           {{"lambda", cfg.lambda}, {"batch_size", cfg.batch_size}, {"epochs", cfg.epochs}, {"seed", cfg.seed}}}};
}

CurriculumPlan plan_from_json(const json& j) {
  CurriculumPlan plan;
  try {
    plan.clusters = j.at("clusters").get<std::array<std::vector<std::string>, kStages>>();
    plan.stage_steps = j.at("stage_steps").get<std::array<std::int64_t, kStages>>();
    plan.total_steps = j.at("total_steps").get<std::int64_t>();
    for (const auto& [id, r] : j.at("rds").items()) plan.rds[id] = rational_from_string(r.get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformedRecord, std::string("plan: ") + e.what());
  }
  std::int64_t sum = 0;
  for (auto s : plan.stage_steps) sum += s;
  if (sum != plan.total_steps) fail(ErrorCode::kMalformedRecord, "plan: stage_steps do not sum to total_steps");
  return plan;
}

}  // namespace cdp
