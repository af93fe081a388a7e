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

#include "cdp/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <iostream>
#include <map>
#include <thread>

#include "cdp/error.hpp"
#include "cdp/jsonl.hpp"

namespace cdp {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Index into schema.names when `line` is a section header.
std::optional<std::size_t> header_index(const AttributeSchema& schema, std::string_view line) {
  line = trim(line);
  if (!line.starts_with("###")) return std::nullopt;
  std::string name = lower(trim(line.substr(3)));
  while (!name.empty() && name.back() == ':') name.pop_back();
  for (std::size_t i = 0; i < schema.names.size(); ++i) {
    if (lower(schema.names[i]) == name) return i;
  }
  return std::nullopt;
}

std::string attribute_list(const AttributeSchema& schema) {
  std::string out;
  for (std::size_t i = 0; i < schema.names.size(); ++i) {
    out += "  " + std::to_string(i + 1) + ". " + schema.names[i] + "\n";
  }
  return out;
}

std::string ask(Backend& backend, const std::string& key, const std::string& prompt,
                const AgentOptions& options, int attempt) {
  CompletionRequest request;
  request.fixture_key = key;
  request.messages = {{"user", prompt}};
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;
  request.n = 1;
  request.attempt = attempt;
  return backend.complete(request).at(0);
}

OptimizedRequirement make_requirement(const CorpusRecord& record, const AttributeSchema& schema,
                                      std::vector<std::string> values, Provenance provenance) {
  OptimizedRequirement out;
  out.requirement_id = record.requirement_id;
  out.final_text = assemble_attributes(schema, values);
  for (std::size_t i = 0; i < schema.names.size(); ++i) {
    out.attributes.emplace_back(schema.names[i], std::move(values[i]));
  }
  out.provenance = provenance;
  return out;
}

struct RevisionReply {
  std::vector<Issue> issues;
  std::optional<std::vector<std::string>> values;
};

std::optional<RevisionReply> parse_revision(const AttributeSchema& schema, std::string_view text) {
  std::size_t pos = 0;
  std::string_view first;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    std::string_view line = trim(text.substr(pos, eol == std::string_view::npos ? eol : eol - pos));
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    if (!line.empty()) {
      first = line;
      break;
    }
  }
  if (lower(first.substr(0, 7)) != "issues:") return std::nullopt;

  RevisionReply reply;
  std::string list = lower(trim(first.substr(7)));
  if (list != "none" && !list.empty()) {
    std::size_t start = 0;
    while (start <= list.size()) {
      auto comma = list.find(',', start);
      std::string item(trim(std::string_view(list).substr(start, comma == std::string::npos ? comma : comma - start)));
      start = comma == std::string::npos ? list.size() + 1 : comma + 1;
      if (item.empty()) continue;
      Issue issue;
      if (item == "ambiguity") {
        issue = Issue::kAmbiguity;
      } else if (item == "redundancy") {
        issue = Issue::kRedundancy;
      } else if (item.starts_with("logical inconsisten") || item.starts_with("logical_inconsisten")) {
        issue = Issue::kLogicalInconsistency;
      } else if (item == "incompleteness") {
        issue = Issue::kIncompleteness;
      } else {
        return std::nullopt;
      }
      if (std::find(reply.issues.begin(), reply.issues.end(), issue) == reply.issues.end()) {
        reply.issues.push_back(issue);
      }
    }
  }
  if (!reply.issues.empty()) {
    reply.values = parse_attributes(schema, text.substr(pos));
    if (!reply.values) return std::nullopt;
  }
  return reply;
}

}  // namespace

const std::string& OptimizedRequirement::attribute(std::string_view name) const {
  for (const auto& [n, v] : attributes) {
    if (n == name) return v;
  }
  fail(ErrorCode::kPrecondition, "unknown attribute '" + std::string(name) + "'");
}

std::string_view issue_name(Issue issue) {
  switch (issue) {
    case Issue::kAmbiguity: return "ambiguity";
    case Issue::kRedundancy: return "redundancy";
    case Issue::kLogicalInconsistency: return "logical_inconsistency";
    case Issue::kIncompleteness: return "incompleteness";
  }
  return "unknown";
}

std::string assemble_attributes(const AttributeSchema& schema, const std::vector<std::string>& values) {
  require(values.size() == schema.names.size(), "assemble_attributes: value count mismatch");
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += "\n";
    out += "### " + schema.names[i] + "\n" + values[i] + "\n";
  }
  return out;
}

std::optional<std::vector<std::string>> parse_attributes(const AttributeSchema& schema,
                                                         std::string_view text) {
  std::vector<std::string> values;
  std::optional<std::size_t> content_start;
  std::size_t pos = 0;
  auto close_section = [&](std::size_t end) {
    if (content_start) values.emplace_back(trim(text.substr(*content_start, end - *content_start)));
  };
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    std::size_t line_end = eol == std::string_view::npos ? text.size() : eol;
    auto idx = header_index(schema, text.substr(pos, line_end - pos));
    if (idx) {
      close_section(pos);
      if (*idx != values.size()) return std::nullopt;
      content_start = eol == std::string_view::npos ? text.size() : eol + 1;
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  close_section(text.size());
  if (values.size() != schema.names.size()) return std::nullopt;
  for (const auto& v : values) {
    if (v.empty()) return std::nullopt;
  }
  return values;
}

std::string optimize_fixture_key(std::string_view id) { return std::string(id) + ".optimize"; }
std::string revise_fixture_key(std::string_view id) { return std::string(id) + ".revise"; }
std::string optimized_fixture_key(std::string_view id) { return std::string(id) + ".optimized"; }

OptimizedRequirement optimize_requirement(const CorpusRecord& record, const AgentOptions& options,
                                          Backend& backend) {
  require(!trim(record.reference_solution).empty(),
          "optimize_requirement: '" + record.requirement_id + "' has no reference solution");
  const std::string prompt = render_template(
      options.optimize_prompt, {{"requirement", record.requirement_text},
                                {"golden_code", record.reference_solution},
                                {"attributes", attribute_list(options.schema)}});
  for (int attempt = 0; attempt < options.max_asks; ++attempt) {
    std::string reply = ask(backend, optimize_fixture_key(record.requirement_id), prompt, options, attempt);
    if (auto values = parse_attributes(options.schema, reply)) {
      return make_requirement(record, options.schema, std::move(*values), Provenance::kAgentDraft);
    }
  }
  fail(ErrorCode::kAgentOutputUnparseable,
       "optimization agent output for '" + record.requirement_id + "' lacks the required sections");
}

std::pair<OptimizedRequirement, RevisionReport> revise_requirement(const CorpusRecord& record,
                                                                   const OptimizedRequirement& draft,
                                                                   const AgentOptions& options,
                                                                   Backend& backend) {
  require(draft.requirement_id == record.requirement_id,
          "revise_requirement: draft for '" + draft.requirement_id + "' does not belong to '" +
              record.requirement_id + "'");
  const std::string prompt = render_template(
      options.revise_prompt, {{"requirement", record.requirement_text},
                              {"golden_code", record.reference_solution},
                              {"draft", draft.final_text},
                              {"attributes", attribute_list(options.schema)}});
  for (int attempt = 0; attempt < options.max_asks; ++attempt) {
    std::string text = ask(backend, revise_fixture_key(record.requirement_id), prompt, options, attempt);
    auto reply = parse_revision(options.schema, text);
    if (!reply) continue;

    RevisionReport report{record.requirement_id, reply->issues, !reply->issues.empty()};
    if (!report.revised) {
      OptimizedRequirement same = draft;
      same.provenance = Provenance::kRevised;
      return {std::move(same), std::move(report)};
    }
    return {make_requirement(record, options.schema, std::move(*reply->values), Provenance::kRevised),
            std::move(report)};
  }
  fail(ErrorCode::kAgentOutputUnparseable,
       "revision agent output for '" + record.requirement_id + "' is not in the expected format");
}

OptimizationOutcome decide(const CorpusRecord& record, const std::string& optimized_text,
                           Rational original_rds, Rational optimized_rds) {
  OptimizationOutcome out;
  out.requirement_id = record.requirement_id;
  out.original_rds = original_rds;
  out.optimized_rds = optimized_rds;
  // Ties keep the original: a rewrite must strictly lower the difficulty.
  if (optimized_rds < original_rds) {
    out.decision = Decision::kAcceptOptimized;
    out.effective_text = optimized_text;
  } else {
    out.decision = Decision::kRetainOriginal;
    out.effective_text = record.requirement_text;
  }
  return out;
}

OptimizationOutcome accept_or_retain(const CorpusRecord& record, const OptimizedRequirement& revised,
                                     const DifficultyRecord& original,
                                     const PerceptionOptions& perception, Backend& backend,
                                     CandidateRunner& runner) {
  require(revised.requirement_id == record.requirement_id && original.requirement_id == record.requirement_id,
          "accept_or_retain: mismatched requirement ids");
  require(original.status == RecordStatus::kOk,
          "accept_or_retain: original difficulty for '" + record.requirement_id + "' was skipped");
  DifficultyRecord optimized =
      perceive_requirement(record, revised.final_text, optimized_fixture_key(record.requirement_id),
                           perception, backend, runner);
  return decide(record, revised.final_text, original.rds, optimized.rds);
}

std::vector<OptimizationOutcome> optimize_corpus(const std::vector<CorpusRecord>& records,
                                                 const std::vector<DifficultyRecord>& difficulty,
                                                 const OptimizeOptions& options,
                                                 Backend& generation_backend, Backend& agent_backend,
                                                 CandidateRunner& runner) {
  std::map<std::string, const DifficultyRecord*> by_id;
  for (const auto& d : difficulty) by_id[d.requirement_id] = &d;

  std::vector<std::pair<const CorpusRecord*, const DifficultyRecord*>> targets;
  for (const auto& r : records) {
    auto it = by_id.find(r.requirement_id);
    if (it == by_id.end() || it->second->status != RecordStatus::kOk) continue;
    if (options.include_non_challenging || it->second->rds == Rational(1)) {
      targets.emplace_back(&r, it->second);
    }
  }

  std::vector<OptimizationOutcome> out(targets.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < targets.size();) {
      const auto& [record, original] = targets[i];
      try {
        OptimizedRequirement draft = optimize_requirement(*record, options.agents, agent_backend);
        auto [revised, report] = revise_requirement(*record, draft, options.agents, agent_backend);
        out[i] = accept_or_retain(*record, revised, *original, options.perception, generation_backend,
                                  runner);
        out[i].revision_issues = report.issues_found;
      } catch (const std::exception& e) {
        out[i] = decide(*record, record->requirement_text, original->rds, original->rds);
        const auto* err = dynamic_cast<const Error*>(&e);
        out[i].error = (err ? std::string(error_code_name(err->code())) : std::string("Error")) + ": " + e.what();
        std::cerr << "optimizer: retaining " << record->requirement_id << " (" << out[i].error << ")\n";
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(options.perception.parallelism, 1)), 1, std::max<std::size_t>(targets.size(), 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

json outcome_to_json(const OptimizationOutcome& o) {
  json issues = json::array();
  for (Issue i : o.revision_issues) issues.push_back(issue_name(i));
  json j = {{"requirement_id", o.requirement_id},
            {"original_rds", o.original_rds.to_double()},
            {"optimized_rds", o.optimized_rds.to_double()},
            {"original_rds_exact", o.original_rds.to_string()},
            {"optimized_rds_exact", o.optimized_rds.to_string()},
            {"decision", o.decision == Decision::kAcceptOptimized ? "accept_optimized" : "retain_original"},
            {"effective_text", o.effective_text},
            {"revision_issues", std::move(issues)}};
  if (!o.error.empty()) j["error"] = o.error;
  return j;
}

namespace {
Rational rational_from_string(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rational(std::stoll(s));
  return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}
}  // namespace

OptimizationOutcome outcome_from_json(const json& j) {
  OptimizationOutcome o;
  o.requirement_id = j.at("requirement_id").get<std::string>();
  o.original_rds = rational_from_string(j.at("original_rds_exact").get<std::string>());
  o.optimized_rds = rational_from_string(j.at("optimized_rds_exact").get<std::string>());
  const std::string decision = j.at("decision").get<std::string>();
  if (decision == "accept_optimized") {
    o.decision = Decision::kAcceptOptimized;
  } else if (decision == "retain_original") {
    o.decision = Decision::kRetainOriginal;
  } else {
    fail(ErrorCode::kMalformedRecord, "unknown decision '" + decision + "'");
  }
  if ((o.decision == Decision::kAcceptOptimized) != (o.optimized_rds < o.original_rds)) {
    fail(ErrorCode::kMalformedRecord, "decision inconsistent with RDS values for " + o.requirement_id);
  }
  o.effective_text = j.at("effective_text").get<std::string>();
  for (const auto& name : j.value("revision_issues", json::array())) {
    const std::string n = name.get<std::string>();
    for (Issue i : {Issue::kAmbiguity, Issue::kRedundancy, Issue::kLogicalInconsistency,
                    Issue::kIncompleteness}) {
      if (issue_name(i) == n) o.revision_issues.push_back(i);
    }
  }
  o.error = j.value("error", "");
  return o;
}

void save_outcomes(const std::filesystem::path& path, const std::vector<OptimizationOutcome>& outcomes) {
  std::vector<json> lines;
  for (const auto& o : outcomes) lines.push_back(outcome_to_json(o));
  write_jsonl(path, lines);
}

std::vector<OptimizationOutcome> load_outcomes(const std::filesystem::path& path) {
  std::vector<OptimizationOutcome> out;
  for (const auto& j : read_jsonl(path)) {
    try {
      out.push_back(outcome_from_json(j));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cdp
