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

#include "cdp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "cdp/config.hpp"
#include "cdp/corpus.hpp"
#include "cdp/curriculum.hpp"
#include "cdp/error.hpp"
#include "cdp/generation.hpp"
#include "cdp/jsonl.hpp"
#include "cdp/metrics.hpp"
#include "cdp/optimizer.hpp"
#include "cdp/perception.hpp"
#include "cdp/sandbox.hpp"
#include "cdp/simulator.hpp"

namespace cdp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOptions {
  std::string config_path = "cdp.conf";
  std::vector<std::string> sets;
  std::string out_dir;
  bool force = false;
  std::optional<std::uint64_t> seed;
};

struct SamplingFlags {
  std::optional<double> lambda;
  std::optional<int> batch_size;
  std::optional<int> epochs;
};

struct SimulateFlags {
  int n = 300;
  int seeds = 30;
  double lambda = 0.6;
  int batch_size = 24;
  int epochs = 2;
  std::string mix = "1/3,1/3,1/3";
  std::optional<double> hard_optimized_prob;
  bool with_optimization = false;
  bool series = false;
  int parallelism = 4;
};

class Runner {
 public:
  Runner(const GlobalOptions& g, std::ostream& out) : global_(g), out_(out) {}

  PipelineConfig& config() {
    if (!config_) {
      Config c = Config::load(global_.config_path);
      for (const auto& s : global_.sets) c.set(s);
      if (!global_.out_dir.empty()) c.set("out_dir", fs::absolute(global_.out_dir).string());
      if (global_.seed) {
        const std::string s = std::to_string(*global_.seed);
        c.set("split.seed", s);
        c.set("curriculum.seed", s);
        c.set("generation.seed", s);
      }
      config_ = PipelineConfig::from(c);
    }
    return *config_;
  }

  fs::path artifact(const char* name) { return config().out_dir / name; }

  fs::path require_artifact(const char* name, const char* producer) {
    fs::path p = artifact(name);
    if (!fs::exists(p)) {
      fail(ErrorCode::kMissingArtifact,
           p.string() + " not found; run `cdp " + std::string(producer) + "` first");
    }
    return p;
  }

  // True when every output exists and --force was not given.
  bool up_to_date(const char* command, std::initializer_list<const char*> outputs) {
    if (global_.force) return false;
    for (const char* o : outputs) {
      if (!fs::exists(artifact(o))) return false;
    }
    out_ << command << ": outputs already present in " << config().out_dir.string()
         << " (use --force to recompute)\n";
    return true;
  }

  Backend& backend() {
    if (!backend_) {
      const PipelineConfig& c = config();
      if (c.backend == BackendKind::kStub) {
        backend_ = std::make_unique<StubBackend>(c.fixture_dir);
      } else {
        ChatClientConfig client;
        client.base_url = c.base_url;
        client.model = c.model;
        if (const char* key = std::getenv(c.api_key_env.c_str())) client.api_key = key;
        client.max_concurrency = c.max_concurrency;
        backend_ = std::make_unique<ChatCompletionsBackend>(std::move(client));
      }
    }
    return *backend_;
  }

  CandidateRunner& candidate_runner() {
    if (!runner_) {
      sandbox_ = std::make_unique<Sandbox>(config().sandbox);
      runner_ = std::make_unique<SandboxRunner>(*sandbox_, config().limits);
    }
    return *runner_;
  }

  PerceptionOptions perception_options(const GenerationConfig& generation) {
    PerceptionOptions o;
    o.generation = generation;
    o.prompt_template = config().prompt_template;
    o.parallelism = config().perception_parallelism;
    return o;
  }

  SamplingConfig sampling(const SamplingFlags& flags) {
    SamplingConfig s = config().sampling;
    if (flags.lambda) s.lambda = *flags.lambda;
    if (flags.batch_size) s.batch_size = *flags.batch_size;
    if (flags.epochs) s.epochs = *flags.epochs;
    s.validate();
    return s;
  }

  std::ostream& out() { return out_; }
  const GlobalOptions& global() const { return global_; }

 private:
  const GlobalOptions& global_;
  std::ostream& out_;
  std::optional<PipelineConfig> config_;
  std::unique_ptr<Backend> backend_;
  std::unique_ptr<Sandbox> sandbox_;
  std::unique_ptr<CandidateRunner> runner_;
};

int cmd_ingest(Runner& r, bool check_references) {
  if (!check_references && r.up_to_date("ingest", {kCorpusArtifact})) return 0;
  auto records = load_corpus(r.config().corpus_path);
  std::size_t tests = 0;
  for (const auto& rec : records) tests += rec.tests.size();
  save_corpus(r.artifact(kCorpusArtifact), records);
  r.out() << "ingest: " << records.size() << " requirements, " << tests << " golden tests -> "
          << r.artifact(kCorpusArtifact).string() << "\n";
  if (!check_references) return 0;

  int failures = 0;
  for (const auto& rec : records) {
    if (rec.reference_solution.empty()) continue;
    auto report = r.candidate_runner().run(rec, {rec.requirement_id, 0, rec.reference_solution,
                                                 rec.reference_solution});
    if (!report.all_passed) {
      ++failures;
      r.out() << "ingest: reference solution of " << rec.requirement_id << " passes "
              << report.pass_ratio.to_string() << " of its tests\n";
    }
  }
  r.out() << "ingest: " << records.size() - failures << "/" << records.size()
          << " reference solutions pass their golden tests\n";
  return failures == 0 ? 0 : 1;
}

int cmd_split(Runner& r) {
  if (r.up_to_date("split", {kTrainArtifact, kValidationArtifact})) return 0;
  auto records = load_corpus(r.require_artifact(kCorpusArtifact, "ingest"));
  CorpusSplit split = split_corpus(records, r.config().split);
  save_corpus(r.artifact(kTrainArtifact), split.train);
  if (split.validation.empty()) {
    write_file(r.artifact(kValidationArtifact), "");
  } else {
    save_corpus(r.artifact(kValidationArtifact), split.validation);
  }
  r.out() << "split: " << split.train.size() << " train / " << split.validation.size() << " validation\n";
  return 0;
}

int cmd_perceive(Runner& r) {
  if (r.up_to_date("perceive", {kPerceptionArtifact})) return 0;
  auto train = load_corpus(r.require_artifact(kTrainArtifact, "split"));
  PerceptionOptions options = r.perception_options(r.config().generation);
  options.cache_path = r.artifact(kPerceptionCache);
  auto difficulty = perceive_corpus(train, options, r.backend(), r.candidate_runner());
  save_perception(r.artifact(kPerceptionArtifact), difficulty);

  std::size_t skipped = 0;
  for (const auto& d : difficulty) skipped += d.status == RecordStatus::kSkipped ? 1 : 0;
  r.out() << "perceive: " << difficulty.size() - skipped << " perceived, " << skipped << " skipped, "
          << challenging_set(difficulty).size() << " challenging (rds = 1)";
  if (skipped < difficulty.size()) {
    r.out() << ", learning utilization " << 100.0 * learning_utilization_rate(difficulty).to_double() << "%";
  }
  r.out() << "\n";
  return 0;
}

int cmd_optimize(Runner& r) {
  if (r.up_to_date("optimize", {kOptimizationArtifact})) return 0;
  auto difficulty = load_perception(r.require_artifact(kPerceptionArtifact, "perceive"));
  auto train = load_corpus(r.require_artifact(kTrainArtifact, "split"));
  OptimizeOptions options;
  options.agents = r.config().agents;
  options.perception = r.perception_options(r.config().generation);
  options.include_non_challenging = r.config().include_non_challenging;
  auto outcomes = optimize_corpus(train, difficulty, options, r.backend(), r.backend(), r.candidate_runner());
  save_outcomes(r.artifact(kOptimizationArtifact), outcomes);

  std::size_t accepted = 0;
  for (const auto& o : outcomes) accepted += o.decision == Decision::kAcceptOptimized ? 1 : 0;
  r.out() << "optimize: " << outcomes.size() << " rewritten, " << accepted << " accepted, "
          << outcomes.size() - accepted << " retained";
  auto effective = effective_difficulty(difficulty, outcomes);
  if (!effective.empty()) {
    r.out() << "; learning utilization " << 100.0 * learning_utilization_rate(difficulty).to_double()
            << "% -> " << 100.0 * learning_utilization_rate(effective).to_double() << "%";
  }
  r.out() << "\n";
  return 0;
}

int cmd_plan(Runner& r, const SamplingFlags& flags) {
  if (r.up_to_date("plan", {kPlanArtifact})) return 0;
  auto difficulty = load_perception(r.require_artifact(kPerceptionArtifact, "perceive"));
  auto outcomes = load_outcomes(r.require_artifact(kOptimizationArtifact, "optimize"));
  SamplingConfig sampling = r.sampling(flags);
  auto effective = effective_difficulty(difficulty, outcomes);
  CurriculumPlan plan =
      build_schedule(partition_clusters(effective), static_cast<std::int64_t>(effective.size()), sampling);
  write_file(r.artifact(kPlanArtifact), plan_to_json(plan, sampling).dump(1) + "\n");
  r.out() << "plan: clusters " << plan.clusters[0].size() << "/" << plan.clusters[1].size() << "/"
          << plan.clusters[2].size() << ", " << plan.total_steps << " steps (" << plan.stage_steps[0] << "/"
          << plan.stage_steps[1] << "/" << plan.stage_steps[2] << ")\n";
  return 0;
}

int cmd_emit(Runner& r, const SamplingFlags& flags) {
  if (r.up_to_date("emit", {kScheduleArtifact, kScheduleTextsArtifact})) return 0;
  json plan_json = json::parse(read_file(r.require_artifact(kPlanArtifact, "plan")));
  CurriculumPlan plan = plan_from_json(plan_json);
  auto train = load_corpus(r.require_artifact(kTrainArtifact, "split"));
  auto outcomes = load_outcomes(r.require_artifact(kOptimizationArtifact, "optimize"));

  SamplingConfig sampling = r.config().sampling;
  if (plan_json.contains("sampling")) {
    const auto& s = plan_json["sampling"];
    sampling.lambda = s.value("lambda", sampling.lambda);
    sampling.batch_size = s.value("batch_size", sampling.batch_size);
    sampling.epochs = s.value("epochs", sampling.epochs);
    sampling.seed = s.value("seed", sampling.seed);
  }
  if (flags.lambda) sampling.lambda = *flags.lambda;
  if (flags.batch_size) sampling.batch_size = *flags.batch_size;
  if (flags.epochs) sampling.epochs = *flags.epochs;
  if (r.global().seed) sampling.seed = *r.global().seed;
  plan = build_schedule(std::move(plan), static_cast<std::int64_t>(plan.rds.size()), sampling);

  auto manifests = emit_schedule(plan, effective_texts(train, outcomes), sampling,
                                 {r.artifact(kScheduleArtifact), r.artifact(kScheduleTextsArtifact)});
  Smoothness smooth = trajectory_smoothness(manifests);
  r.out() << "emit: " << manifests.size() << " batches of " << sampling.batch_size << " (lambda "
          << sampling.lambda << ", " << sampling.designated_count() << " designated per batch), max adjacent "
          << "mean-RDS change " << smooth.max_adjacent_delta << " -> " << r.artifact(kScheduleArtifact).string()
          << "\n";
  return 0;
}

int cmd_evaluate(Runner& r, const std::string& results_path) {
  std::vector<ProblemResult> results;
  if (!results_path.empty()) {
    if (!fs::exists(results_path)) fail(ErrorCode::kMissingArtifact, "results file not found: " + results_path);
    results = load_results(results_path);
  } else {
    if (r.up_to_date("evaluate", {kEvalArtifact})) return 0;
    auto validation = load_corpus(r.require_artifact(kValidationArtifact, "split"));
    results = evaluate_corpus(validation, r.perception_options(r.config().evaluation), r.backend(),
                              r.candidate_runner(), r.config().benchmark);
  }
  auto reports = build_reports(results);
  if (results_path.empty()) save_reports(r.artifact(kEvalArtifact), reports);
  r.out() << format_report_table(reports);
  return 0;
}

std::array<double, 3> parse_mix(const std::string& text) {
  std::array<double, 3> mix{};
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    auto comma = text.find(',', start);
    if ((i < 2) == (comma == std::string::npos)) fail(ErrorCode::kInvalidMix, "--mix needs three ratios");
    std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    auto slash = item.find('/');
    try {
      mix[i] = slash == std::string::npos ? std::stod(item)
                                          : std::stod(item.substr(0, slash)) / std::stod(item.substr(slash + 1));
    } catch (const std::logic_error&) {
      fail(ErrorCode::kInvalidMix, "cannot parse ratio '" + item + "'");
    }
    start = comma + 1;
  }
  return mix;
}

int cmd_simulate(Runner& r, const SimulateFlags& f) {
  fs::path out_dir = r.global().out_dir.empty() ? fs::path("out") : fs::path(r.global().out_dir);
  out_dir /= "simulate";
  const std::uint64_t base_seed = r.global().seed.value_or(0);
  SyntheticOptions synth;
  if (f.hard_optimized_prob) synth.bands[2].optimized = *f.hard_optimized_prob;
  const auto mix = parse_mix(f.mix);

  const std::vector<Policy> policies = {Policy::random(), Policy::staged(), Policy::smoothed(f.lambda)};
  SamplingConfig cfg;
  cfg.batch_size = f.batch_size;
  cfg.epochs = f.epochs;

  struct Run {
    std::size_t policy;
    int seed;
    SimulationTrace trace;
  };
  std::vector<Run> runs;
  for (int s = 0; s < f.seeds; ++s) {
    for (std::size_t p = 0; p < policies.size(); ++p) runs.push_back({p, s, {}});
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < runs.size();) {
      try {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(runs[i].seed);
        auto corpus = synthesize_corpus(f.n, seed, mix, synth);
        runs[i].trace = simulate(corpus, policies[runs[i].policy], cfg, f.with_optimization, seed);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < std::max(1, f.parallelism); ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  fs::create_directories(out_dir);
  json summary = json::array();
  char line[200];
  std::snprintf(line, sizeof(line), "%-16s %8s %14s %16s %12s\n", "policy", "seeds", "max_delta_rds",
                "stage2_reward", "utilization");
  r.out() << line;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    double delta = 0, reward = 0, util = 0;
    int n = 0;
    for (const auto& run : runs) {
      if (run.policy != p) continue;
      std::string stem = policies[p].name();
      std::replace(stem.begin(), stem.end(), '(', '-');
      std::erase(stem, ')');
      stem += "_seed" + std::to_string(run.seed);
      write_file(out_dir / (stem + ".json"), trace_to_json(run.trace).dump() + "\n");
      if (f.series) {
        std::string csv = "step,stage,mean_rds,reward\n";
        for (std::size_t s = 0; s < run.trace.per_step_reward.size(); ++s) {
          std::snprintf(line, sizeof(line), "%zu,%d,%.6f,%.6f\n", s, run.trace.per_step_stage[s],
                        run.trace.per_step_mean_rds[s], run.trace.per_step_reward[s]);
          csv += line;
        }
        write_file(out_dir / (stem + ".csv"), csv);
      }
      delta += run.trace.max_adjacent_delta;
      reward += run.trace.stage_mean_reward(2);
      util += run.trace.utilization;
      ++n;
    }
    summary.push_back({{"policy", policies[p].name()},
                       {"seeds", n},
                       {"mean_max_adjacent_delta", delta / n},
                       {"mean_stage2_reward", reward / n},
                       {"mean_utilization", util / n}});
    std::snprintf(line, sizeof(line), "%-16s %8d %14.4f %16.4f %11.2f%%\n", policies[p].name().c_str(), n,
                  delta / n, reward / n, 100.0 * util / n);
    r.out() << line;
  }
  write_file(out_dir / "summary.json", summary.dump(1) + "\n");
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Curriculum data plane for RL code generation", "cdp"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("-c,--config", g.config_path, "Pipeline config file")->capture_default_str();
  app.add_option("--set", g.sets, "Override a config value (key=value), repeatable");
  app.add_option("--out-dir", g.out_dir, "Artifact directory (overrides out_dir)");
  app.add_flag("--force", g.force, "Recompute even when outputs exist");
  app.add_option("--seed", g.seed, "Seed for the split, generation and batch sampling");
  app.fallthrough();

  bool check_references = false;
  auto* ingest = app.add_subcommand("ingest", "Validate the corpus and copy it into the artifact directory");
  ingest->add_flag("--check-references", check_references, "Run every reference solution against its tests");
  app.add_subcommand("split", "Seeded train/validation split");
  app.add_subcommand("perceive", "Sample candidates and compute per-requirement difficulty");
  app.add_subcommand("optimize", "Rewrite challenging requirements and keep strict improvements");

  SamplingFlags sampling;
  for (auto* sub : {app.add_subcommand("plan", "Build RDS clusters and the stage schedule"),
                    app.add_subcommand("emit", "Write the batch schedule")}) {
    sub->add_option("--lambda", sampling.lambda, "Difficulty smoothing factor in [0, 1]");
    sub->add_option("--batch-size", sampling.batch_size, "Requirements per batch");
    sub->add_option("--epochs", sampling.epochs, "Passes over the training set");
  }

  std::string results_path;
  auto* evaluate = app.add_subcommand("evaluate", "Pass@1 and AvgPassRatio");
  evaluate->add_option("--results", results_path, "Score an existing results file instead of generating");

  SimulateFlags sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Synthetic comparison of sampling policies");
  simulate_cmd->add_option("--n", sim.n, "Synthetic requirements")->capture_default_str();
  simulate_cmd->add_option("--seeds", sim.seeds, "Independent runs per policy")->capture_default_str();
  simulate_cmd->add_option("--lambda", sim.lambda, "Smoothing factor of the smoothed policy")->capture_default_str();
  simulate_cmd->add_option("--batch-size", sim.batch_size)->capture_default_str();
  simulate_cmd->add_option("--epochs", sim.epochs)->capture_default_str();
  simulate_cmd->add_option("--mix", sim.mix, "easy,medium,hard proportions")->capture_default_str();
  simulate_cmd->add_option("--hard-optimized-prob", sim.hard_optimized_prob,
                           "Solve probability of hard items after optimization");
  simulate_cmd->add_flag("--with-optimization", sim.with_optimization);
  simulate_cmd->add_flag("--series", sim.series, "Also write per-step CSV series");
  simulate_cmd->add_option("--parallelism", sim.parallelism)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    Runner runner(g, out);
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "ingest") return cmd_ingest(runner, check_references);
    if (name == "split") return cmd_split(runner);
    if (name == "perceive") return cmd_perceive(runner);
    if (name == "optimize") return cmd_optimize(runner);
    if (name == "plan") return cmd_plan(runner, sampling);
    if (name == "emit") return cmd_emit(runner, sampling);
    if (name == "evaluate") return cmd_evaluate(runner, results_path);
    if (name == "simulate") return cmd_simulate(runner, sim);
  } catch (const Error& e) {
    err << to_line(json{{"error", error_code_name(e.code())}, {"message", e.what()}}) << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << to_line(json{{"error", "Internal"}, {"message", e.what()}}) << "\n";
    return 3;
  }
  return 1;
}

}  // namespace cdp
