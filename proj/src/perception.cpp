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

#include "cdp/perception.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "cdp/error.hpp"
#include "cdp/jsonl.hpp"
#include "cdp/random.hpp"

namespace cdp {
namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string options_hash(const PerceptionOptions& o) {
  json j = {{"n", o.generation.n_samples},
            {"t", o.generation.temperature},
            {"max_tokens", o.generation.max_new_tokens},
            {"prompt", o.prompt_template}};
  if (o.generation.seed) j["seed"] = *o.generation.seed;
  return hex64(fnv1a(j.dump()));
}

Rational parse_rational(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  std::string s = j.get<std::string>();
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rational(std::stoll(s));
  return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

// Serialized appends to the cache file.
class CacheWriter {
 public:
  explicit CacheWriter(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const bool torn = std::filesystem::exists(path) && std::filesystem::file_size(path) > 0 &&
                      read_file(path).back() != '\n';
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_) fail(ErrorCode::kIo, "cannot open cache " + path.string());
    // Terminate a torn last line so the next entry starts on its own line.
    if (torn) out_ << '\n';
  }
  void append(const std::string& key, const DifficultyRecord& record) {
    std::lock_guard lock(mu_);
    out_ << to_line(json{{"key", key}, {"record", difficulty_to_cache_json(record)}}) << '\n';
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

std::map<std::string, DifficultyRecord> read_cache(const std::filesystem::path& path) {
  std::map<std::string, DifficultyRecord> cache;
  if (!std::filesystem::exists(path)) return cache;
  std::string text = read_file(path);
  for (auto line : split_lines(text)) {
    // A torn final line from an interrupted run is dropped, not fatal.
    try {
      json j = json::parse(line);
      cache.insert_or_assign(j.at("key").get<std::string>(),
                             difficulty_from_cache_json(j.at("record")));
    } catch (const std::exception&) {
    }
  }
  return cache;
}

}  // namespace

DifficultyRecord compute_rds(const std::vector<ExecutionReport>& reports) {
  if (reports.empty()) fail(ErrorCode::kEmptyReports, "compute_rds: no execution reports");
  DifficultyRecord rec;
  rec.requirement_id = reports.front().requirement_id;
  for (const auto& r : reports) {
    if (r.requirement_id != rec.requirement_id) {
      fail(ErrorCode::kMixedRequirementIds,
           "compute_rds: reports for '" + rec.requirement_id + "' and '" + r.requirement_id + "'");
    }
    rec.n_correct += r.all_passed ? 1 : 0;
  }
  rec.n_samples = static_cast<int>(reports.size());
  rec.rds = Rational(1) - Rational(rec.n_correct, rec.n_samples);
  rec.resolved = rec.n_correct >= 1;
  rec.per_candidate = reports;
  return rec;
}

std::string SandboxRunner::fingerprint() const {
  json j = {{"argv", sandbox_.config().interpreter_argv},
            {"jail", sandbox_.config().jail_argv},
            {"wall", limits_.wall_timeout.count()},
            {"mem", limits_.memory_limit},
            {"out", limits_.max_output_bytes}};
  return "sandbox:" + hex64(fnv1a(j.dump()));
}

DifficultyRecord perceive_requirement(const CorpusRecord& record, std::string_view requirement_text,
                                      std::string_view fixture_key, const PerceptionOptions& options,
                                      Backend& backend, CandidateRunner& runner) {
  SampleRequest request;
  request.requirement_id = record.requirement_id;
  request.requirement_text = std::string(requirement_text);
  request.fixture_key = std::string(fixture_key);
  request.prompt_template = options.prompt_template;
  std::vector<CandidateCode> candidates = sample_candidates(request, options.generation, backend);

  std::vector<ExecutionReport> reports;
  reports.reserve(candidates.size());
  for (const auto& c : candidates) reports.push_back(runner.run(record, c));
  return compute_rds(reports);
}

std::vector<DifficultyRecord> perceive_corpus(const std::vector<CorpusRecord>& records,
                                              const PerceptionOptions& options, Backend& backend,
                                              CandidateRunner& runner) {
  if (records.empty()) fail(ErrorCode::kEmptyReports, "perceive_corpus: empty corpus");
  options.generation.validate();

  const std::string suffix =
      "|" + backend.fingerprint() + "|" + runner.fingerprint() + "|" + options_hash(options);
  std::map<std::string, DifficultyRecord> cache;
  std::unique_ptr<CacheWriter> writer;
  if (options.cache_path) {
    cache = read_cache(*options.cache_path);
    writer = std::make_unique<CacheWriter>(*options.cache_path);
  }

  std::vector<DifficultyRecord> out(records.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < records.size();) {
      const CorpusRecord& record = records[i];
      const std::string key =
          record.requirement_id + "|" + hex64(fnv1a(record_to_json(record).dump())) + suffix;
      if (auto it = cache.find(key); it != cache.end()) {
        out[i] = it->second;
        continue;
      }
      try {
        out[i] = perceive_requirement(record, record.requirement_text, record.requirement_id,
                                      options, backend, runner);
        if (writer) writer->append(key, out[i]);
      } catch (const std::exception& e) {
        DifficultyRecord skipped;
        skipped.requirement_id = record.requirement_id;
        skipped.n_samples = options.generation.n_samples;
        skipped.status = RecordStatus::kSkipped;
        const auto* err = dynamic_cast<const Error*>(&e);
        skipped.error = std::string(err ? error_code_name(err->code()) : "Error") + ": " + e.what();
        std::cerr << "perception: skipping " << record.requirement_id << " (" << skipped.error
                  << ")\n";
        out[i] = std::move(skipped);
      }
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.parallelism, 1)), 1, records.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

std::vector<std::string> challenging_set(const std::vector<DifficultyRecord>& records) {
  std::vector<std::string> ids;
  for (const auto& r : records) {
    if (r.status == RecordStatus::kOk && r.rds == Rational(1)) ids.push_back(r.requirement_id);
  }
  return ids;
}

Rational learning_utilization_rate(const std::vector<DifficultyRecord>& records) {
  std::int64_t perceived = 0;
  std::int64_t resolved = 0;
  for (const auto& r : records) {
    if (r.status != RecordStatus::kOk) continue;
    ++perceived;
    resolved += r.resolved ? 1 : 0;
  }
  if (perceived == 0) fail(ErrorCode::kEmptyReports, "learning_utilization_rate: no perceived records");
  return {resolved, perceived};
}

json difficulty_to_json(const DifficultyRecord& r) {
  json j = {{"requirement_id", r.requirement_id},
            {"n_samples", r.n_samples},
            {"n_correct", r.n_correct},
            {"resolved", r.resolved},
            {"status", r.status == RecordStatus::kOk ? "ok" : "skipped"}};
  if (r.status == RecordStatus::kOk) {
    j["rds"] = r.rds.to_double();
  } else {
    j["rds"] = nullptr;
    j["error"] = r.error;
  }
  return j;
}

DifficultyRecord difficulty_from_json(const json& j) {
  DifficultyRecord r;
  r.requirement_id = j.at("requirement_id").get<std::string>();
  r.n_samples = j.at("n_samples").get<int>();
  r.n_correct = j.at("n_correct").get<int>();
  r.status = j.at("status").get<std::string>() == "ok" ? RecordStatus::kOk : RecordStatus::kSkipped;
  if (r.status == RecordStatus::kOk) {
    if (r.n_samples < 1 || r.n_correct < 0 || r.n_correct > r.n_samples) {
      fail(ErrorCode::kMalformedRecord, "inconsistent counts for " + r.requirement_id);
    }
    r.rds = Rational(1) - Rational(r.n_correct, r.n_samples);
  } else {
    r.error = j.value("error", "");
  }
  r.resolved = r.n_correct >= 1;
  return r;
}

json difficulty_to_cache_json(const DifficultyRecord& r) {
  json j = difficulty_to_json(r);
  json candidates = json::array();
  for (const auto& report : r.per_candidate) {
    json verdicts = json::array();
    for (const auto& v : report.verdicts) {
      verdicts.push_back({{"test_id", v.test_id},
                          {"outcome", outcome_name(v.outcome)},
                          {"elapsed_s", v.elapsed.count()}});
    }
    candidates.push_back({{"candidate_index", report.candidate_index},
                          {"all_passed", report.all_passed},
                          {"pass_ratio", report.pass_ratio.to_string()},
                          {"verdicts", std::move(verdicts)}});
  }
  j["per_candidate"] = std::move(candidates);
  return j;
}

DifficultyRecord difficulty_from_cache_json(const json& j) {
  DifficultyRecord r = difficulty_from_json(j);
  for (const auto& cj : j.value("per_candidate", json::array())) {
    ExecutionReport report;
    report.requirement_id = r.requirement_id;
    report.candidate_index = cj.at("candidate_index").get<int>();
    for (const auto& vj : cj.at("verdicts")) {
      TestVerdict v;
      v.test_id = vj.at("test_id").get<std::string>();
      v.outcome = outcome_from_name(vj.at("outcome").get<std::string>());
      v.elapsed = Seconds(vj.value("elapsed_s", 0.0));
      report.verdicts.push_back(std::move(v));
    }
    report.finalize();
    if (report.pass_ratio != parse_rational(cj.at("pass_ratio"))) {
      fail(ErrorCode::kMalformedRecord, "cached pass_ratio mismatch for " + r.requirement_id);
    }
    r.per_candidate.push_back(std::move(report));
  }
  return r;
}

void save_perception(const std::filesystem::path& path, const std::vector<DifficultyRecord>& records) {
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(difficulty_to_json(r));
  write_jsonl(path, lines);
}

std::vector<DifficultyRecord> load_perception(const std::filesystem::path& path) {
  std::vector<DifficultyRecord> out;
  for (const auto& j : read_jsonl(path)) {
    try {
      out.push_back(difficulty_from_json(j));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cdp
