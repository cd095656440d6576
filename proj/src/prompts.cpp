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

#include "visdebate/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace visdebate {
namespace {

bool name_start(char c) { return std::islower(static_cast<unsigned char>(c)) || c == '_'; }
bool name_char(char c) {
  return name_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

// Walks `text`, calling on_text for literal runs and on_name for each
// placeholder. Throws TemplateError on a stray brace.
template <typename OnText, typename OnName>
void scan(std::string_view text, std::string_view where, OnText on_text, OnName on_name) {
  std::size_t i = 0;
  std::size_t run = 0;
  auto flush = [&](std::size_t end) {
    if (end > run) on_text(text.substr(run, end - run));
  };
  while (i < text.size()) {
    const char c = text[i];
    if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
      flush(i);
      on_text(text.substr(i, 1));
      i += 2;
      run = i;
    } else if (c == '{') {
      std::size_t j = i + 1;
      if (j < text.size() && name_start(text[j])) {
        while (j < text.size() && name_char(text[j])) ++j;
      }
      if (j == i + 1 || j >= text.size() || text[j] != '}') {
        throw TemplateError(fmt::format("{}: malformed placeholder at offset {}", where, i));
      }
      flush(i);
      on_name(text.substr(i + 1, j - i - 1));
      i = j + 1;
      run = i;
    } else if (c == '}') {
      throw TemplateError(fmt::format("{}: unmatched '}}' at offset {}", where, i));
    } else {
      ++i;
    }
  }
  flush(text.size());
}

std::string substitute(std::string_view text, std::string_view where, const Bindings& bindings) {
  std::string out;
  out.reserve(text.size());
  scan(
      text, where, [&](std::string_view lit) { out.append(lit); },
      [&](std::string_view name) { out.append(bindings.at(std::string(name))); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string labels_text(const BenchItem& item) {
  std::string out;
  const auto labels = item.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += i + 1 == labels.size() ? " or " : ", ";
    out += labels[i].letter();
  }
  return out;
}

ChatRequest make_request(const BenchItem& item, const PromptTemplate& tmpl,
                         const Bindings& bindings, const PromptContext& ctx, AgentRole role,
                         Phase phase, int round) {
  RenderedPrompt rendered = render(tmpl, bindings);
  ChatRequest req;
  req.system_prompt = std::move(rendered.system);
  req.user_parts.emplace_back(TextPart{std::move(rendered.user)});
  req.user_parts.emplace_back(ImagePart{item.image});
  req.sampling = ctx.sampling;
  req.tags = CallTags{role, phase, round, item.id, ctx.trial_index};
  req.template_ref = tmpl.ref();
  return req;
}

const PromptCatalogue& catalogue_of(const PromptContext& ctx) {
  if (ctx.catalogue == nullptr) throw Error("prompt context has no catalogue");
  return *ctx.catalogue;
}

Bindings common_bindings(const BenchItem& item, const PromptContext& ctx) {
  return Bindings{{"question", item.question},
                  {"choices", format_choices(item)},
                  {"labels", labels_text(item)},
                  {"sentinel", ctx.sentinel}};
}

}  // namespace

MissingBinding::MissingBinding(std::vector<std::string> names)
    : Error(fmt::format("missing template bindings: {}", fmt::join(names, ", "))),
      names_(std::move(names)) {}

UnknownBinding::UnknownBinding(std::vector<std::string> names)
    : Error(fmt::format("unknown template bindings: {}", fmt::join(names, ", "))),
      names_(std::move(names)) {}

std::set<std::string> PromptTemplate::placeholders() const {
  std::set<std::string> names;
  auto collect = [&](std::string_view text, std::string_view where) {
    scan(
        text, where, [](std::string_view) {},
        [&](std::string_view name) { names.emplace(name); });
  };
  collect(system, id + " (system)");
  collect(user, id + " (user)");
  return names;
}

void PromptTemplate::validate() const {
  if (id.empty()) throw TemplateError("template without id");
  if (version.empty()) throw TemplateError(fmt::format("template {}: missing version", id));
  const auto used = placeholders();
  std::vector<std::string> undeclared;
  std::set_difference(used.begin(), used.end(), required_bindings.begin(),
                      required_bindings.end(), std::back_inserter(undeclared));
  if (!undeclared.empty()) {
    throw TemplateError(fmt::format("template {}: placeholders not listed in bindings: {}", id,
                                    fmt::join(undeclared, ", ")));
  }
  std::vector<std::string> unused;
  std::set_difference(required_bindings.begin(), required_bindings.end(), used.begin(),
                      used.end(), std::back_inserter(unused));
  if (!unused.empty()) {
    throw TemplateError(fmt::format("template {}: bindings never used: {}", id,
                                    fmt::join(unused, ", ")));
  }
}

RenderedPrompt render(const PromptTemplate& tmpl, const Bindings& bindings) {
  std::vector<std::string> missing;
  for (const auto& name : tmpl.required_bindings) {
    if (!bindings.count(name)) missing.push_back(name);
  }
  if (!missing.empty()) throw MissingBinding(std::move(missing));
  std::vector<std::string> unknown;
  for (const auto& [name, value] : bindings) {
    if (!tmpl.required_bindings.count(name)) unknown.push_back(name);
  }
  if (!unknown.empty()) throw UnknownBinding(std::move(unknown));
  return RenderedPrompt{substitute(tmpl.system, tmpl.id + " (system)", bindings),
                        substitute(tmpl.user, tmpl.id + " (user)", bindings)};
}

std::vector<std::string> required_template_ids() {
  using namespace template_id;
  return {kDescribeGlobal,   kDescribeDetailed, kReasonIndependent, kReasonAdversarial,
          kDecideAgreement,  kDecideConflict,   kBaseline};
}

PromptTemplate PromptCatalogue::parse_template(std::istream& in, const std::string& source) {
  PromptTemplate tmpl;
  enum class Section { Header, System, User } section = Section::Header;
  bool saw_system = false;
  bool saw_user = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "--- system") {
      if (section != Section::Header) {
        throw TemplateError(fmt::format("{}:{}: unexpected system section", source, lineno));
      }
      section = Section::System;
      saw_system = true;
      continue;
    }
    if (line == "--- user") {
      if (section != Section::System) {
        throw TemplateError(
            fmt::format("{}:{}: user section must follow system section", source, lineno));
      }
      section = Section::User;
      saw_user = true;
      continue;
    }
    switch (section) {
      case Section::Header: {
        if (trim(line).empty() || line.front() == '#') break;
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
          throw TemplateError(fmt::format("{}:{}: expected \"key: value\"", source, lineno));
        }
        const std::string key(trim(std::string_view(line).substr(0, colon)));
        const std::string value(trim(std::string_view(line).substr(colon + 1)));
        if (key == "id") {
          tmpl.id = value;
        } else if (key == "version") {
          tmpl.version = value;
        } else if (key == "bindings") {
          std::string_view rest = value;
          while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto name = trim(rest.substr(0, comma));
            if (!name.empty()) tmpl.required_bindings.emplace(name);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
          }
        } else {
          throw TemplateError(fmt::format("{}:{}: unknown header key \"{}\"", source, lineno, key));
        }
        break;
      }
      case Section::System:
        tmpl.system += line + "\n";
        break;
      case Section::User:
        tmpl.user += line + "\n";
        break;
    }
  }
  if (!saw_system || !saw_user) {
    throw TemplateError(fmt::format("{}: needs \"--- system\" and \"--- user\" sections", source));
  }
  tmpl.system = std::string(trim(tmpl.system));
  tmpl.user = std::string(trim(tmpl.user));
  try {
    tmpl.validate();
  } catch (const TemplateError& e) {
    throw TemplateError(fmt::format("{}: {}", source, e.what()));
  }
  return tmpl;
}

PromptCatalogue PromptCatalogue::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw TemplateError(fmt::format("prompt directory {} not found", dir.string()));
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tmpl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  PromptCatalogue catalogue;
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw TemplateError(fmt::format("cannot read {}", path.string()));
    PromptTemplate tmpl = parse_template(in, path.filename().string());
    if (tmpl.id != path.stem().string()) {
      throw TemplateError(fmt::format("{}: id \"{}\" does not match file name",
                                      path.filename().string(), tmpl.id));
    }
    catalogue.add(std::move(tmpl));
  }
  std::vector<std::string> absent;
  for (const auto& id : required_template_ids()) {
    if (!catalogue.contains(id)) absent.push_back(id);
  }
  if (!absent.empty()) {
    throw TemplateError(fmt::format("prompt directory {} lacks templates: {}", dir.string(),
                                    fmt::join(absent, ", ")));
  }
  return catalogue;
}

void PromptCatalogue::add(PromptTemplate tmpl) {
  tmpl.validate();
  const std::string id = tmpl.id;
  if (!templates_.emplace(id, std::move(tmpl)).second) {
    throw TemplateError(fmt::format("duplicate template id \"{}\"", id));
  }
}

const PromptTemplate& PromptCatalogue::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw TemplateError(fmt::format("no template \"{}\"", id));
  return it->second;
}

std::map<std::string, std::string> PromptCatalogue::versions() const {
  std::map<std::string, std::string> out;
  for (const auto& [id, tmpl] : templates_) out.emplace(id, tmpl.version);
  return out;
}

std::string format_choices(const BenchItem& item) {
  std::string out;
  for (const auto& c : item.choices) {
    if (!out.empty()) out += '\n';
    out += fmt::format("({}) {}", c.label.letter(), c.text);
  }
  return out;
}

std::string format_answer(const Answer& answer) {
  return answer.parsed() ? fmt::format("({})", answer.value().letter()) : "undeclared";
}

ChatRequest build_description_prompt(const BenchItem& item, DescriptionMode mode,
                                     const PromptContext& ctx) {
  const bool global = mode == DescriptionMode::Global;
  const auto& tmpl = catalogue_of(ctx).get(global ? template_id::kDescribeGlobal
                                                  : template_id::kDescribeDetailed);
  return make_request(item, tmpl, Bindings{{"question", item.question}}, ctx,
                      AgentRole::Describer, global ? Phase::Global : Phase::Detailed, 0);
}

ChatRequest build_reasoning_prompt(const BenchItem& item, const SceneDescription& description,
                                   AgentRole reasoner, int round,
                                   const std::optional<AgentPosition>& self_prior,
                                   const std::optional<AgentPosition>& opponent,
                                   const PromptContext& ctx) {
  if (reasoner != AgentRole::ReasonerA && reasoner != AgentRole::ReasonerB) {
    throw Error(fmt::format("{} is not a reasoning agent", to_string(reasoner)));
  }
  if (round < 1) throw InconsistentRound(fmt::format("debate round {} < 1", round));
  if (round == 1 && (self_prior || opponent)) {
    throw InconsistentRound("round 1 is independent analysis; priors must be absent");
  }
  if (round >= 2 && !(self_prior && opponent)) {
    throw InconsistentRound(
        fmt::format("round {} needs both the agent's own and the opponent's prior position",
                    round));
  }

  Bindings b = common_bindings(item, ctx);
  b["global_view"] = description.global_view;
  b["detailed_view"] = description.detailed_view;
  const PromptTemplate* tmpl = nullptr;
  if (round == 1) {
    tmpl = &catalogue_of(ctx).get(template_id::kReasonIndependent);
  } else {
    tmpl = &catalogue_of(ctx).get(template_id::kReasonAdversarial);
    b["round"] = std::to_string(round);
    b["own_answer"] = format_answer(self_prior->answer);
    b["own_rationale"] = self_prior->rationale;
    b["opponent_answer"] = format_answer(opponent->answer);
    b["opponent_rationale"] = opponent->rationale;
  }
  return make_request(item, *tmpl, b, ctx, reasoner, Phase::Reasoning, round);
}

ChatRequest build_decision_prompt(const BenchItem& item, const SceneDescription& description,
                                  const AgentPosition& reasoner_a,
                                  const AgentPosition& reasoner_b, const PromptContext& ctx) {
  const bool agree = reasoner_a.answer.parsed() && reasoner_a.answer == reasoner_b.answer;
  Bindings b = common_bindings(item, ctx);
  b["global_view"] = description.global_view;
  b["detailed_view"] = description.detailed_view;
  b["reasoner_a_rationale"] = reasoner_a.rationale;
  b["reasoner_b_rationale"] = reasoner_b.rationale;
  const PromptTemplate* tmpl = nullptr;
  if (agree) {
    tmpl = &catalogue_of(ctx).get(template_id::kDecideAgreement);
    b["agreed_answer"] = format_answer(reasoner_a.answer);
  } else {
    tmpl = &catalogue_of(ctx).get(template_id::kDecideConflict);
    b["reasoner_a_answer"] = format_answer(reasoner_a.answer);
    b["reasoner_b_answer"] = format_answer(reasoner_b.answer);
  }
  return make_request(item, *tmpl, b, ctx, AgentRole::Decider, Phase::Decision, 0);
}

ChatRequest build_baseline_prompt(const BenchItem& item, const PromptContext& ctx) {
  return make_request(item, catalogue_of(ctx).get(template_id::kBaseline),
                      common_bindings(item, ctx), ctx, AgentRole::Baseline, Phase::Baseline, 0);
}

}  // namespace visdebate
