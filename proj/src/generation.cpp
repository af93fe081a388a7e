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

#include "cdp/generation.hpp"

#include <algorithm>
#include <thread>

#include "cdp/error.hpp"
#include "cdp/jsonl.hpp"
#include "cdp/random.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cdp {

using nlohmann::json;

void GenerationConfig::validate() const {
  if (n_samples < 1) fail(ErrorCode::kConfigInvalid, "n_samples must be >= 1");
  if (!(temperature >= 0.0)) fail(ErrorCode::kConfigInvalid, "temperature must be >= 0");
  if (max_new_tokens < 1) fail(ErrorCode::kConfigInvalid, "max_new_tokens must be >= 1");
}

std::vector<std::string> parse_completions_file(std::string_view text) {
  std::vector<std::string> out;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      json j = json::parse(line);
      out.push_back(j.is_string() ? j.get<std::string>() : j.at("completion").get<std::string>());
    } catch (const std::exception& e) {
      fail(ErrorCode::kMalformedRecord,
           "completions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

StubBackend::StubBackend(std::filesystem::path fixture_dir) : dir_(std::move(fixture_dir)) {
  if (!std::filesystem::is_directory(*dir_)) {
    fail(ErrorCode::kConfigInvalid, "fixture directory not found: " + dir_->string());
  }
  // Fingerprint covers every fixture byte so cached perception is invalidated
  // when fixtures change.
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
    if (entry.path().extension() == ".completions") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a("stub");
  for (const auto& f : files) {
    h ^= fnv1a(f.filename().string());
    h = h * 0x100000001b3ULL ^ fnv1a(read_file(f));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "stub:%016llx", static_cast<unsigned long long>(h));
  fingerprint_ = buf;
}

StubBackend::StubBackend(std::map<std::string, std::vector<std::string>> fixtures)
    : fixtures_(std::move(fixtures)) {
  std::uint64_t h = fnv1a("stub-memory");
  for (const auto& [key, items] : fixtures_) {
    h ^= fnv1a(key);
    for (const auto& s : items) h = h * 0x100000001b3ULL ^ fnv1a(s);
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "stub-mem:%016llx", static_cast<unsigned long long>(h));
  fingerprint_ = buf;
}

const std::vector<std::string>* StubBackend::lookup(const std::string& key) {
  std::lock_guard lock(mu_);
  if (auto it = fixtures_.find(key); it != fixtures_.end()) return &it->second;
  if (!dir_) return nullptr;
  std::filesystem::path file = *dir_ / (key + ".completions");
  if (!std::filesystem::exists(file)) return nullptr;
  auto [it, _] = fixtures_.emplace(key, parse_completions_file(read_file(file)));
  return &it->second;
}

std::vector<std::string> StubBackend::complete(const CompletionRequest& request) {
  require(request.n >= 1, "completion request with n < 1");
  const auto* items = lookup(request.fixture_key);
  if (items == nullptr) {
    fail(ErrorCode::kBackendRejected, "no fixtures for '" + request.fixture_key + "'");
  }
  const std::size_t begin = static_cast<std::size_t>(request.attempt) * request.n;
  const std::size_t end = begin + static_cast<std::size_t>(request.n);
  if (end > items->size()) {
    fail(ErrorCode::kBackendRejected,
         "fixtures for '" + request.fixture_key + "' exhausted: need " + std::to_string(end) +
             ", have " + std::to_string(items->size()));
  }
  return {items->begin() + static_cast<std::ptrdiff_t>(begin),
          items->begin() + static_cast<std::ptrdiff_t>(end)};
}

ChatCompletionsBackend::ChatCompletionsBackend(ChatClientConfig config)
    : config_(std::move(config)), in_flight_(std::clamp(config_.max_concurrency, 1, 1024)) {
  const std::string& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    fail(ErrorCode::kConfigInvalid, "generation.base_url must include a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  host_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

std::string ChatCompletionsBackend::fingerprint() const {
  return "chat:" + config_.base_url + "#" + config_.model;
}

std::vector<std::string> ChatCompletionsBackend::complete(const CompletionRequest& request) {
  require(request.n >= 1, "completion request with n < 1");
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});

  std::vector<std::string> out;
  while (static_cast<int>(out.size()) < request.n) {
    json body = {{"model", config_.model},
                 {"messages", messages},
                 {"temperature", request.temperature},
                 {"n", request.n - static_cast<int>(out.size())},
                 {"max_tokens", request.max_tokens}};
    if (request.seed) body["seed"] = *request.seed;
    const std::string payload = body.dump();

    httplib::Result result;
    {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{in_flight_};

      for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));
        httplib::Client client(host_);
        client.set_connection_timeout(config_.request_timeout);
        client.set_read_timeout(config_.request_timeout);
        client.set_write_timeout(config_.request_timeout);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
          headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        result = client.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
        if (result) break;
      }
    }
    if (!result) {
      fail(ErrorCode::kBackendUnavailable,
           "transport failure after " + std::to_string(config_.max_attempts) +
               " attempts: " + httplib::to_string(result.error()));
    }
    if (result->status < 200 || result->status >= 300) {
      fail(ErrorCode::kBackendRejected,
           "HTTP " + std::to_string(result->status) + ": " + result->body);
    }
    std::size_t before = out.size();
    try {
      json response = json::parse(result->body);
      for (const auto& choice : response.at("choices")) {
        const auto& content = choice.at("message").at("content");
        out.push_back(content.is_null() ? std::string{} : content.get<std::string>());
      }
    } catch (const std::exception& e) {
      fail(ErrorCode::kBackendRejected, std::string("unparseable response: ") + e.what());
    }
    if (out.size() == before) fail(ErrorCode::kBackendRejected, "response carried no choices");
  }
  out.resize(static_cast<std::size_t>(request.n));
  return out;
}

std::string render_template(std::string_view templ,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < templ.size()) {
    if (templ[i] == '{') {
      auto close = templ.find('}', i);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(templ.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += templ[i++];
  }
  return out;
}

std::string extract_code(std::string_view raw) {
  std::string_view best;
  bool found = false;
  std::size_t pos = 0;
  std::optional<std::size_t> open_content;  // offset where the open block's content starts
  while (pos <= raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    std::size_t line_end = eol == std::string_view::npos ? raw.size() : eol;
    std::string_view line = raw.substr(pos, line_end - pos);
    std::size_t lead = line.find_first_not_of(" \t");
    bool is_fence = lead != std::string_view::npos && line.substr(lead).starts_with("```");
    if (is_fence) {
      if (!open_content) {
        open_content = eol == std::string_view::npos ? raw.size() : eol + 1;
      } else {
        std::size_t content_end = pos > *open_content ? pos - 1 : *open_content;
        std::string_view block = raw.substr(*open_content, content_end - *open_content);
        if (!found || block.size() > best.size()) best = block;
        found = true;
        open_content.reset();
      }
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return found ? std::string(best) : std::string(raw);
}

std::vector<CandidateCode> sample_candidates(const SampleRequest& request,
                                             const GenerationConfig& cfg, Backend& backend) {
  cfg.validate();
  CompletionRequest completion;
  completion.fixture_key = request.fixture_key.empty() ? request.requirement_id : request.fixture_key;
  completion.messages = {{"user", render_template(request.prompt_template,
                                                  {{"requirement", request.requirement_text}})}};
  completion.temperature = cfg.temperature;
  completion.n = cfg.n_samples;
  completion.max_tokens = cfg.max_new_tokens;
  completion.seed = cfg.seed;

  std::vector<std::string> raw = backend.complete(completion);
  if (static_cast<int>(raw.size()) != cfg.n_samples) {
    fail(ErrorCode::kBackendRejected, "backend returned " + std::to_string(raw.size()) +
                                          " completions, expected " + std::to_string(cfg.n_samples));
  }
  std::vector<CandidateCode> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CandidateCode c;
    c.requirement_id = request.requirement_id;
    c.candidate_index = static_cast<int>(i);
    c.extracted_source = extract_code(raw[i]);
    c.raw_completion = std::move(raw[i]);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cdp
