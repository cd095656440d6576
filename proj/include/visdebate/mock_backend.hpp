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

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <tuple>

#include "visdebate/backend.hpp"

namespace visdebate {

/// One scripted response. Unset optionals are wildcards ("*").
struct MockRule {
  AgentRole role = AgentRole::Describer;
  std::optional<Phase> phase;
  std::optional<int> round;
  std::string item_id;
  std::optional<int> trial;
  std::string response;
};

/// Canned responses keyed by call tags. Lookup picks the most specific rule:
///
///   round+trial exact > round exact, trial * > round *, trial exact
///     > round *, trial * > default
///
/// and within one level a rule naming the phase beats one that does not.
/// Adding two rules with the same key is an error, so lookups never tie.
class MockScript {
 public:
  void add(MockRule rule);
  void set_default(std::string response);

  std::optional<std::string> lookup(const CallTags& tags) const;
  std::size_t size() const noexcept { return rules_.size(); }
  const std::optional<std::string>& default_response() const noexcept { return default_; }

  /// JSON Lines, one record per line:
  ///   {"role": "reasoner_a", "phase": "reasoning", "round": 1 | "*",
  ///    "item_id": "q1", "trial": 0 | "*", "response": "..."}
  /// `phase` is optional; `round`/`trial` default to "*". The record with
  /// role, round, item_id and trial all "*" is the default response.
  static MockScript parse(std::istream& in);
  static MockScript load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

 private:
  // (role, phase or -1, round or -1, item, trial or -1)
  using Key = std::tuple<int, int, int, std::string, int>;
  std::map<Key, std::string> rules_;
  std::optional<std::string> default_;
};

/// Deterministic scripted backend; accepts fixture image keys.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockScript script) : script_(std::move(script)) {}

  /// Throws BackendError(ScriptMiss) when no rule matches and no default exists.
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return "mock"; }

  std::size_t calls() const noexcept { return calls_.load(std::memory_order_relaxed); }
  const MockScript& script() const noexcept { return script_; }

 private:
  const MockScript script_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace visdebate
