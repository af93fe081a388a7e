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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cdp {

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames, so readers never observe a
// partially written artifact.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string_view> split_lines(std::string_view text);

// Compact single-line serialization with sorted keys; stable across runs.
std::string to_line(const nlohmann::json& j);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& lines);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace cdp
