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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace cdp {

struct GenerationConfig {
  int n_samples = 16;
  double temperature = 1.0;
  int max_new_tokens = 1024;
  std::optional<std::uint64_t> seed;

  void validate() const;
};

struct CandidateCode {
  std::string requirement_id;
  int candidate_index = 0;
  std::string raw_completion;
  std::string extracted_source;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct CompletionRequest {
  // Stub playback key; live backends ignore it.
  std::string fixture_key;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  int n = 1;
  int max_tokens = 1024;
  std::optional<std::uint64_t> seed;
  // Re-ask counter. Stubs serve completions [attempt*n, attempt*n + n).
  int attempt = 0;
};

// Text-generation backend. Implementations are safe to share across threads.
class Backend {
 public:
  virtual ~Backend() = default;
  // Returns exactly request.n completions or throws Error{kBackendUnavailable}
  // or Error{kBackendRejected}.
  virtual std::vector<std::string> complete(const CompletionRequest& request) = 0;
  // Identifies the model/fixture set; part of the perception cache key.
  virtual std::string fingerprint() const = 0;
};

// Plays back fixtures keyed by fixture_key. On disk, `<key>.completions`
// holds one JSON object per line with a "completion" string.
class StubBackend : public Backend {
 public:
  explicit StubBackend(std::filesystem::path fixture_dir);
  explicit StubBackend(std::map<std::string, std::vector<std::string>> fixtures);

  std::vector<std::string> complete(const CompletionRequest& request) override;
  std::string fingerprint() const override { return fingerprint_; }

 private:
  const std::vector<std::string>* lookup(const std::string& key);

  std::optional<std::filesystem::path> dir_;
  std::mutex mu_;
  std::map<std::string, std::vector<std::string>> fixtures_;
  std::string fingerprint_;
};

std::vector<std::string> parse_completions_file(std::string_view text);

struct ChatClientConfig {
  std::string base_url;  // e.g. "https://api.example.com/v1"
  std::string model;
  std::string api_key;
  int max_concurrency = 4;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::seconds request_timeout{120};
};

// Speaks the chat-completions wire protocol. Transport failures are retried
// with exponential backoff; HTTP error statuses are not.
class ChatCompletionsBackend : public Backend {
 public:
  explicit ChatCompletionsBackend(ChatClientConfig config);

  std::vector<std::string> complete(const CompletionRequest& request) override;
  std::string fingerprint() const override;

 private:
  ChatClientConfig config_;
  std::string host_;
  std::string path_prefix_;
  std::counting_semaphore<1024> in_flight_;
};

inline constexpr std::string_view kDefaultGenerationPrompt =
    "Solve the following programming problem in Python 3. The program reads from "
    "standard input and writes to standard output. Output a single fenced code block "
    "and nothing else.\n\n{requirement}\n";

std::string render_template(std::string_view templ,
                            const std::map<std::string, std::string>& values);

// Longest triple-backtick fenced block, or the input unchanged when there is
// none. Idempotent.
std::string extract_code(std::string_view raw_completion);

struct SampleRequest {
  std::string requirement_id;
  std::string requirement_text;
  // Defaults to requirement_id.
  std::string fixture_key;
  std::string prompt_template{kDefaultGenerationPrompt};
};

std::vector<CandidateCode> sample_candidates(const SampleRequest& request,
                                             const GenerationConfig& cfg, Backend& backend);

}  // namespace cdp
