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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdp/corpus.hpp"
#include "cdp/curriculum.hpp"
#include "cdp/generation.hpp"
#include "cdp/optimizer.hpp"
#include "cdp/sandbox.hpp"

namespace cdp {

// Flat `section.key = value` settings; '#' starts a comment. Unknown keys
// are rejected so typos fail loudly.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config parse(std::string_view text, std::filesystem::path base_dir = ".");

  // "key=value" override, as given to --set.
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  std::optional<std::string> get(const std::string& key) const;
  const std::filesystem::path& base_dir() const { return base_dir_; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_ = ".";
};

enum class BackendKind { kStub, kLive };

struct PipelineConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path out_dir = "out";
  SplitSpec split;

  BackendKind backend = BackendKind::kStub;
  std::filesystem::path fixture_dir;
  std::string base_url;
  std::string model;
  std::string api_key_env = "RECRL_API_KEY";
  int max_concurrency = 4;
  GenerationConfig generation;
  std::string prompt_template{kDefaultGenerationPrompt};

  SandboxConfig sandbox;
  ResourceLimits limits;
  int perception_parallelism = 4;

  AgentOptions agents;
  bool include_non_challenging = false;

  SamplingConfig sampling;

  std::string benchmark = "validation";
  GenerationConfig evaluation{1, 0.0, 1024, std::nullopt};

  // Throws Error{kConfigInvalid}.
  static PipelineConfig from(const Config& config);
  void validate() const;
};

}  // namespace cdp
