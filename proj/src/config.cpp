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

#include "cdp/config.hpp"

#include <charconv>
#include <set>

#include "cdp/error.hpp"
#include "cdp/jsonl.hpp"
#include "json.hpp"

namespace cdp {
namespace {

const std::set<std::string> kKnownKeys = {
    "corpus.path",
    "out_dir",
    "split.train_fraction",
    "split.seed",
    "generation.backend",
    "generation.fixture_dir",
    "generation.base_url",
    "generation.model",
    "generation.api_key_env",
    "generation.max_concurrency",
    "generation.n_samples",
    "generation.temperature",
    "generation.max_new_tokens",
    "generation.seed",
    "generation.prompt_file",
    "sandbox.interpreter_argv",
    "sandbox.jail_argv",
    "sandbox.require_external_jail",
    "sandbox.wall_timeout_s",
    "sandbox.memory_limit_mb",
    "sandbox.max_output_kb",
    "sandbox.parallelism",
    "perception.parallelism",
    "optimizer.attributes",
    "optimizer.optimize_prompt_file",
    "optimizer.revise_prompt_file",
    "optimizer.temperature",
    "optimizer.include_non_challenging",
    "curriculum.lambda",
    "curriculum.batch_size",
    "curriculum.epochs",
    "curriculum.seed",
    "evaluation.benchmark",
    "evaluation.n_samples",
    "evaluation.temperature",
};

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void invalid(const std::string& key, const std::string& value, const char* what) {
  fail(ErrorCode::kConfigInvalid, key + " = '" + value + "': " + what);
}

class Reader {
 public:
  explicit Reader(const Config& c) : c_(c) {}

  template <typename T>
  void integer(const std::string& key, T& out) const {
    if (auto v = c_.get(key)) {
      T parsed{};
      auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), parsed);
      if (ec != std::errc{} || ptr != v->data() + v->size()) invalid(key, *v, "not an integer");
      out = parsed;
    }
  }
  void real(const std::string& key, double& out) const {
    if (auto v = c_.get(key)) {
      try {
        std::size_t used = 0;
        out = std::stod(*v, &used);
        if (used != v->size()) invalid(key, *v, "not a number");
      } catch (const std::logic_error&) {
        invalid(key, *v, "not a number");
      }
    }
  }
  void boolean(const std::string& key, bool& out) const {
    if (auto v = c_.get(key)) {
      if (*v == "true" || *v == "1" || *v == "yes") {
        out = true;
      } else if (*v == "false" || *v == "0" || *v == "no") {
        out = false;
      } else {
        invalid(key, *v, "not a boolean");
      }
    }
  }
  void string(const std::string& key, std::string& out) const {
    if (auto v = c_.get(key)) out = *v;
  }
  void path(const std::string& key, std::filesystem::path& out) const {
    if (auto v = c_.get(key)) {
      std::filesystem::path p = *v;
      out = p.is_absolute() ? p : c_.base_dir() / p;
    }
  }
  // JSON array, or whitespace separated words.
  void argv(const std::string& key, std::vector<std::string>& out) const {
    auto v = c_.get(key);
    if (!v) return;
    out.clear();
    if (!v->empty() && v->front() == '[') {
      try {
        out = nlohmann::json::parse(*v).get<std::vector<std::string>>();
      } catch (const std::exception&) {
        invalid(key, *v, "not a JSON string array");
      }
      return;
    }
    std::size_t i = 0;
    while (i < v->size()) {
      auto b = v->find_first_not_of(" \t", i);
      if (b == std::string::npos) break;
      auto e = v->find_first_of(" \t", b);
      out.push_back(v->substr(b, e == std::string::npos ? std::string::npos : e - b));
      i = e == std::string::npos ? v->size() : e;
    }
  }
  void text_file(const std::string& key, std::string& out) const {
    std::filesystem::path p;
    path(key, p);
    if (!p.empty()) {
      if (!std::filesystem::exists(p)) invalid(key, p.string(), "file not found");
      out = read_file(p);
    }
  }

 private:
  const Config& c_;
};

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kConfigInvalid, "config file not found: " + path.string());
  return parse(read_file(path), path.has_parent_path() ? path.parent_path() : ".");
}

Config Config::parse(std::string_view text, std::filesystem::path base_dir) {
  Config c;
  c.base_dir_ = std::move(base_dir);
  std::size_t line_no = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    auto hash = raw.find('#');
    std::string_view line = trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kConfigInvalid, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    c.set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return c;
}

void Config::set(std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    fail(ErrorCode::kConfigInvalid, "--set expects key=value, got '" + std::string(assignment) + "'");
  }
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

void Config::set(const std::string& key, const std::string& value) {
  if (!kKnownKeys.contains(key)) fail(ErrorCode::kConfigInvalid, "unknown config key '" + key + "'");
  values_[key] = value;
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

PipelineConfig PipelineConfig::from(const Config& config) {
  PipelineConfig p;
  Reader r(config);
  p.fixture_dir = config.base_dir() / "fixtures";

  r.path("corpus.path", p.corpus_path);
  r.path("out_dir", p.out_dir);
  r.real("split.train_fraction", p.split.train_fraction);
  r.integer("split.seed", p.split.seed);

  if (auto b = config.get("generation.backend")) {
    if (*b == "stub") {
      p.backend = BackendKind::kStub;
    } else if (*b == "live") {
      p.backend = BackendKind::kLive;
    } else {
      invalid("generation.backend", *b, "expected stub or live");
    }
  }
  r.path("generation.fixture_dir", p.fixture_dir);
  r.string("generation.base_url", p.base_url);
  r.string("generation.model", p.model);
  r.string("generation.api_key_env", p.api_key_env);
  r.integer("generation.max_concurrency", p.max_concurrency);
  r.integer("generation.n_samples", p.generation.n_samples);
  r.real("generation.temperature", p.generation.temperature);
  r.integer("generation.max_new_tokens", p.generation.max_new_tokens);
  if (config.get("generation.seed")) {
    std::uint64_t seed = 0;
    r.integer("generation.seed", seed);
    p.generation.seed = seed;
  }
  r.text_file("generation.prompt_file", p.prompt_template);

  r.argv("sandbox.interpreter_argv", p.sandbox.interpreter_argv);
  r.argv("sandbox.jail_argv", p.sandbox.jail_argv);
  r.boolean("sandbox.require_external_jail", p.sandbox.require_external_jail);
  double wall = p.limits.wall_timeout.count();
  r.real("sandbox.wall_timeout_s", wall);
  p.limits.wall_timeout = Seconds(wall);
  std::uint64_t mem_mb = p.limits.memory_limit >> 20;
  r.integer("sandbox.memory_limit_mb", mem_mb);
  p.limits.memory_limit = mem_mb << 20;
  std::uint64_t out_kb = p.limits.max_output_bytes >> 10;
  r.integer("sandbox.max_output_kb", out_kb);
  p.limits.max_output_bytes = out_kb << 10;
  r.integer("sandbox.parallelism", p.sandbox.parallelism);
  r.integer("perception.parallelism", p.perception_parallelism);

  if (auto attrs = config.get("optimizer.attributes")) {
    std::vector<std::string> names;
    std::size_t start = 0;
    while (start <= attrs->size()) {
      auto comma = attrs->find(',', start);
      std::string_view item =
          trim(std::string_view(*attrs).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (!item.empty()) names.emplace_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (names.size() < 5) invalid("optimizer.attributes", *attrs, "need at least the five base attributes");
    p.agents.schema.names = std::move(names);
  }
  r.text_file("optimizer.optimize_prompt_file", p.agents.optimize_prompt);
  r.text_file("optimizer.revise_prompt_file", p.agents.revise_prompt);
  r.real("optimizer.temperature", p.agents.temperature);
  r.boolean("optimizer.include_non_challenging", p.include_non_challenging);

  r.real("curriculum.lambda", p.sampling.lambda);
  r.integer("curriculum.batch_size", p.sampling.batch_size);
  r.integer("curriculum.epochs", p.sampling.epochs);
  r.integer("curriculum.seed", p.sampling.seed);

  r.string("evaluation.benchmark", p.benchmark);
  r.integer("evaluation.n_samples", p.evaluation.n_samples);
  r.real("evaluation.temperature", p.evaluation.temperature);

  p.validate();
  return p;
}

void PipelineConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfigInvalid, what);
  };
  check(!corpus_path.empty(), "corpus.path is required");
  check(std::filesystem::exists(corpus_path), "corpus.path not found: " + corpus_path.string());
  check(split.train_fraction > 0 && split.train_fraction < 1, "split.train_fraction must lie in (0, 1)");
  generation.validate();
  evaluation.validate();
  sampling.validate();
  check(limits.wall_timeout.count() > 0 && limits.memory_limit > 0 && limits.max_output_bytes > 0,
        "sandbox limits must be positive");
  check(sandbox.parallelism >= 1 && perception_parallelism >= 1, "parallelism must be >= 1");
  check(!sandbox.interpreter_argv.empty(), "sandbox.interpreter_argv is empty");
  check(!sandbox.require_external_jail || !sandbox.jail_argv.empty(),
        "sandbox.require_external_jail needs sandbox.jail_argv");
  if (backend == BackendKind::kStub) {
    check(std::filesystem::is_directory(fixture_dir),
          "generation.fixture_dir not found: " + fixture_dir.string());
  } else {
    check(!base_url.empty(), "generation.base_url is required for the live backend");
    check(!model.empty(), "generation.model is required for the live backend");
  }
}

}  // namespace cdp
