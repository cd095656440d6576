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
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "visdebate/backend.hpp"
#include "visdebate/core.hpp"

namespace visdebate {

class TemplateError : public Error {
 public:
  using Error::Error;
};

class MissingBinding : public Error {
 public:
  explicit MissingBinding(std::vector<std::string> names);
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

class UnknownBinding : public Error {
 public:
  explicit UnknownBinding(std::vector<std::string> names);
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

class InconsistentRound : public Error {
 public:
  using Error::Error;
};

/// Text with `{name}` placeholders; `{{` and `}}` are literal braces.
struct PromptTemplate {
  std::string id;
  std::string version;
  std::string system;
  std::string user;
  std::set<std::string> required_bindings;

  /// Placeholders must equal required_bindings. Throws TemplateError.
  void validate() const;
  std::set<std::string> placeholders() const;
  TemplateRef ref() const { return {id, version}; }
};

using Bindings = std::map<std::string, std::string>;

struct RenderedPrompt {
  std::string system;
  std::string user;
};

/// Substitutes every placeholder. Values are inserted verbatim and are not
/// rescanned for placeholders.
RenderedPrompt render(const PromptTemplate& tmpl, const Bindings& bindings);

/// Template ids the pipeline needs; one file `<id>.tmpl` each.
namespace template_id {
inline constexpr const char* kDescribeGlobal = "describe_global";
inline constexpr const char* kDescribeDetailed = "describe_detailed";
inline constexpr const char* kReasonIndependent = "reason_independent";
inline constexpr const char* kReasonAdversarial = "reason_adversarial";
inline constexpr const char* kDecideAgreement = "decide_agreement";
inline constexpr const char* kDecideConflict = "decide_conflict";
inline constexpr const char* kBaseline = "baseline";
}  // namespace template_id

std::vector<std::string> required_template_ids();

/// Versioned templates loaded from a directory of `.tmpl` documents:
///
///   id: describe_global
///   version: 1.0
///   bindings: question, sentinel
///   --- system
///   ...
///   --- user
///   ...
class PromptCatalogue {
 public:
  /// Loads every `*.tmpl` in `dir`, validates each, and checks that all
  /// required ids are present. Throws TemplateError.
  static PromptCatalogue load(const std::filesystem::path& dir);
  static PromptTemplate parse_template(std::istream& in, const std::string& source);

  void add(PromptTemplate tmpl);
  const PromptTemplate& get(const std::string& id) const;
  bool contains(const std::string& id) const { return templates_.count(id) != 0; }
  /// id -> version
  std::map<std::string, std::string> versions() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

enum class DescriptionMode { Global, Detailed };

struct SceneDescription {
  std::string global_view;
  std::string detailed_view;
};

/// Everything besides the item that shapes a built request.
struct PromptContext {
  const PromptCatalogue* catalogue = nullptr;
  std::string sentinel = "FINAL ANSWER:";
  Sampling sampling;
  int trial_index = 0;
};

/// "(A) text\n(B) text..."
std::string format_choices(const BenchItem& item);
/// "(B)" or "undeclared".
std::string format_answer(const Answer& answer);

ChatRequest build_description_prompt(const BenchItem& item, DescriptionMode mode,
                                     const PromptContext& ctx);

/// Round 1 takes no priors; later rounds need both. Throws InconsistentRound.
ChatRequest build_reasoning_prompt(const BenchItem& item, const SceneDescription& description,
                                   AgentRole reasoner, int round,
                                   const std::optional<AgentPosition>& self_prior,
                                   const std::optional<AgentPosition>& opponent,
                                   const PromptContext& ctx);

ChatRequest build_decision_prompt(const BenchItem& item, const SceneDescription& description,
                                  const AgentPosition& reasoner_a,
                                  const AgentPosition& reasoner_b, const PromptContext& ctx);

/// Single direct question-answering call for the baseline comparator.
ChatRequest build_baseline_prompt(const BenchItem& item, const PromptContext& ctx);

}  // namespace visdebate
