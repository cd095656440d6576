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

#include "visdebate/transcript_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

namespace visdebate {

using nlohmann::json;

namespace {

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(); }

template <typename T, typename Parse>
T parse_enum(const json& v, const char* what, Parse parse) {
  const auto parsed = parse(v.get<std::string>());
  if (!parsed) throw Error(fmt::format("transcript: unknown {} \"{}\"", what, v.get<std::string>()));
  return *parsed;
}

}  // namespace

json to_json(const TranscriptDocument& doc) {
  const Transcript& t = doc.transcript;
  json entries = json::array();
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const TranscriptEntry& e = t.entries[i];
    entries.push_back({
        {"seq", i},
        {"role", to_string(e.role)},
        {"phase", to_string(e.phase)},
        {"round", e.round},
        {"template", {{"id", e.request.template_ref.id}, {"version", e.request.template_ref.version}}},
        {"request", {{"system", e.request.system}, {"user", e.request.user}, {"image", e.request.image}}},
        {"response", e.response},
        {"answer", e.answer ? json(e.answer->str()) : json()},
        {"error", optional_string(e.error)},
        {"attempts", e.attempts},
    });
  }
  json termination;
  if (t.termination) {
    termination = {{"kind", to_string(*t.termination)}};
    if (*t.termination == Termination::Consensus) termination["round"] = t.termination_round;
  }
  return json{{"schema", kTranscriptSchema},
              {"item_id", t.item_id},
              {"trial_index", t.trial_index},
              {"config", doc.config},
              {"templates", doc.templates},
              {"entries", std::move(entries)},
              {"verdict", t.verdict ? json(t.verdict->str()) : json()},
              {"termination", std::move(termination)},
              {"failure", optional_string(t.failure)}};
}

TranscriptDocument transcript_from_json(const json& doc) {
  if (doc.value("schema", "") != kTranscriptSchema) {
    throw Error(fmt::format("not a transcript document (expected schema {})", kTranscriptSchema));
  }
  TranscriptDocument out;
  try {
    Transcript& t = out.transcript;
    t.item_id = doc.at("item_id").get<std::string>();
    t.trial_index = doc.at("trial_index").get<int>();
    out.config = doc.at("config");
    out.templates = doc.at("templates").get<std::map<std::string, std::string>>();
    for (const json& e : doc.at("entries")) {
      TranscriptEntry entry;
      entry.role = parse_enum<AgentRole>(e.at("role"), "role", role_from_string);
      entry.phase = parse_enum<Phase>(e.at("phase"), "phase", phase_from_string);
      entry.round = e.at("round").get<int>();
      entry.request.template_ref = {e.at("template").at("id").get<std::string>(),
                                    e.at("template").at("version").get<std::string>()};
      entry.request.system = e.at("request").at("system").get<std::string>();
      entry.request.user = e.at("request").at("user").get<std::string>();
      entry.request.image = e.at("request").at("image").get<std::string>();
      entry.response = e.at("response").get<std::string>();
      if (!e.at("answer").is_null()) entry.answer = Answer::from_str(e["answer"].get<std::string>());
      if (!e.at("error").is_null()) entry.error = e["error"].get<std::string>();
      entry.attempts = e.at("attempts").get<int>();
      t.entries.push_back(std::move(entry));
    }
    if (!doc.at("verdict").is_null()) t.verdict = parse_choice(doc["verdict"].get<std::string>());
    const json& term = doc.at("termination");
    if (!term.is_null()) {
      t.termination = parse_enum<Termination>(term.at("kind"), "termination", termination_from_string);
      t.termination_round = term.value("round", 0);
    }
    if (!doc.at("failure").is_null()) t.failure = doc["failure"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed transcript: {}", e.what()));
  }
  return out;
}

void write_transcript(const std::filesystem::path& path, const TranscriptDocument& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << to_json(doc).dump(2) << '\n';
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

TranscriptDocument read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
  return transcript_from_json(doc);
}

std::string format_transcript(const TranscriptDocument& doc) {
  const Transcript& t = doc.transcript;
  std::string out = fmt::format("item {}  trial {}  ({} calls)\n", t.item_id, t.trial_index,
                                t.entries.size());
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const TranscriptEntry& e = t.entries[i];
    out += fmt::format("\n[{}] {} / {}  round {}  template {}@{}", i, to_string(e.role),
                       to_string(e.phase), e.round, e.request.template_ref.id,
                       e.request.template_ref.version);
    if (e.attempts > 1) out += fmt::format("  attempts {}", e.attempts);
    out += '\n';
    if (e.error) {
      out += fmt::format("  error: {}\n", *e.error);
      continue;
    }
    std::istringstream lines(e.response);
    for (std::string line; std::getline(lines, line);) out += "  " + line + "\n";
    if (e.answer) out += fmt::format("  -> answer: {}\n", e.answer->str());
  }
  out += "\n";
  if (t.verdict) {
    out += fmt::format("verdict: {}", t.verdict->str());
    if (t.termination) {
      out += fmt::format("  termination: {}", to_string(*t.termination));
      if (*t.termination == Termination::Consensus) {
        out += fmt::format(" (round {})", t.termination_round);
      }
    }
    out += '\n';
  }
  if (t.failure) out += fmt::format("failed: {}\n", *t.failure);
  return out;
}

}  // namespace visdebate
