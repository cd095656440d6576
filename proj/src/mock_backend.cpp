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

#include "visdebate/mock_backend.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace visdebate {

using nlohmann::json;

namespace {

constexpr int kAny = -1;

int wildcard(const std::optional<int>& v) { return v.value_or(kAny); }
int wildcard(const std::optional<Phase>& p) { return p ? static_cast<int>(*p) : kAny; }

// "*" or a non-negative integer.
std::optional<int> wildcard_int(const json& record, const char* field, std::size_t line) {
  if (!record.contains(field)) return std::nullopt;
  const json& v = record.at(field);
  if (v.is_string() && v.get<std::string>() == "*") return std::nullopt;
  if (v.is_number_integer() && v.get<int>() >= 0) return v.get<int>();
  throw Error(fmt::format("mock script line {}: \"{}\" must be \"*\" or an integer >= 0", line,
                          field));
}

bool is_star(const json& record, const char* field) {
  return !record.contains(field) ||
         (record.at(field).is_string() && record.at(field).get<std::string>() == "*");
}

}  // namespace

void MockScript::add(MockRule rule) {
  if (rule.item_id.empty() || rule.item_id == "*") {
    throw Error("mock rule needs an exact item_id");
  }
  Key key{static_cast<int>(rule.role), wildcard(rule.phase), wildcard(rule.round), rule.item_id,
          wildcard(rule.trial)};
  auto [it, inserted] = rules_.emplace(std::move(key), std::move(rule.response));
  if (!inserted) {
    throw Error(fmt::format("duplicate mock rule for role {} item \"{}\"", to_string(rule.role),
                            rule.item_id));
  }
}

void MockScript::set_default(std::string response) {
  if (default_) throw Error("mock script has more than one default response");
  default_ = std::move(response);
}

std::optional<std::string> MockScript::lookup(const CallTags& tags) const {
  const int role = static_cast<int>(tags.role);
  const int phase = static_cast<int>(tags.phase);
  const std::pair<int, int> levels[] = {
      {tags.round, tags.trial_index}, {tags.round, kAny}, {kAny, tags.trial_index}, {kAny, kAny}};
  for (const auto& [round, trial] : levels) {
    for (int p : {phase, kAny}) {
      auto it = rules_.find(Key{role, p, round, tags.item_id, trial});
      if (it != rules_.end()) return it->second;
    }
  }
  return default_;
}

MockScript MockScript::parse(std::istream& in) {
  MockScript script;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(fmt::format("mock script line {}: {}", line, e.what()));
    }
    if (!record.is_object() || !record.contains("response") || !record["response"].is_string()) {
      throw Error(fmt::format("mock script line {}: record needs a string \"response\"", line));
    }
    std::string response = record["response"].get<std::string>();
    if (is_star(record, "role") && is_star(record, "item_id") && is_star(record, "round") &&
        is_star(record, "trial")) {
      script.set_default(std::move(response));
      continue;
    }
    MockRule rule;
    const auto role = record.contains("role") && record["role"].is_string()
                          ? role_from_string(record["role"].get<std::string>())
                          : std::nullopt;
    if (!role) throw Error(fmt::format("mock script line {}: missing or unknown role", line));
    rule.role = *role;
    if (record.contains("phase")) {
      const auto phase = record["phase"].is_string()
                             ? phase_from_string(record["phase"].get<std::string>())
                             : std::nullopt;
      if (!phase) throw Error(fmt::format("mock script line {}: unknown phase", line));
      rule.phase = phase;
    }
    if (!record.contains("item_id") || !record["item_id"].is_string()) {
      throw Error(fmt::format("mock script line {}: missing item_id", line));
    }
    rule.item_id = record["item_id"].get<std::string>();
    rule.round = wildcard_int(record, "round", line);
    rule.trial = wildcard_int(record, "trial", line);
    rule.response = std::move(response);
    try {
      script.add(std::move(rule));
    } catch (const Error& e) {
      throw Error(fmt::format("mock script line {}: {}", line, e.what()));
    }
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open mock script {}", path.string()));
  return parse(in);
}

void MockScript::write(std::ostream& out) const {
  auto star_or = [](int v) { return v == kAny ? json("*") : json(v); };
  for (const auto& [key, response] : rules_) {
    const auto& [role, phase, round, item, trial] = key;
    json record = {{"role", to_string(static_cast<AgentRole>(role))},
                   {"round", star_or(round)},
                   {"item_id", item},
                   {"trial", star_or(trial)},
                   {"response", response}};
    if (phase != kAny) record["phase"] = to_string(static_cast<Phase>(phase));
    out << record.dump() << '\n';
  }
  if (default_) {
    out << json{{"role", "*"}, {"round", "*"}, {"item_id", "*"}, {"trial", "*"},
                {"response", *default_}}
               .dump()
        << '\n';
  }
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  request.validate();
  const auto& t = request.tags;
  auto text = script_.lookup(t);
  if (!text) {
    throw BackendError(BackendErrorKind::ScriptMiss,
                       fmt::format("no scripted response for role={} phase={} round={} "
                                   "item={} trial={}",
                                   to_string(t.role), to_string(t.phase), t.round, t.item_id,
                                   t.trial_index));
  }
  return ChatResponse{*text, std::nullopt, std::chrono::milliseconds(0)};
}

}  // namespace visdebate
