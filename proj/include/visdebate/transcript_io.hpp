// Copyright 2026 The visdebate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "visdebate/core.hpp"

namespace visdebate {

inline constexpr const char* kTranscriptSchema = "visdebate.transcript/1";

/// One self-contained transcript document: the run's entries plus the
/// configuration and template versions it ran under.
struct TranscriptDocument {
  Transcript transcript;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> templates;

  bool operator==(const TranscriptDocument&) const = default;
};

nlohmann::json to_json(const TranscriptDocument& doc);
/// Throws visdebate::Error on schema mismatch or missing fields.
TranscriptDocument transcript_from_json(const nlohmann::json& doc);

void write_transcript(const std::filesystem::path& path, const TranscriptDocument& doc);
TranscriptDocument read_transcript(const std::filesystem::path& path);

/// Human-readable rendering for `inspect`.
std::string format_transcript(const TranscriptDocument& doc);

}  // namespace visdebate
