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

#include "visdebate/core.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace visdebate {
namespace {

struct DimensionInfo {
  Dimension dim;
  std::string_view name;
  std::string_view abbrev;
  std::string_view display;
  std::string_view seed_name;
};

constexpr std::array<DimensionInfo, 9> kDimensionInfo = {{
    {Dimension::SceneUnderstanding, "scene_understanding", "SU", "Scene Understanding",
     "scene_understanding"},
    {Dimension::InstanceIdentity, "instance_identity", "IIden", "Instance Identity",
     "instance_identity"},
    {Dimension::InstanceAttributes, "instance_attributes", "IA", "Instance Attributes",
     "instance_attribute"},
    {Dimension::InstanceLocation, "instance_location", "IL", "Instance Location",
     "instance_location"},
    {Dimension::InstanceCounting, "instance_counting", "ICount", "Instance Counting",
     "instances_counting"},
    {Dimension::SpatialRelation, "spatial_relation", "SR", "Spatial Relation",
     "spatial_relation"},
    {Dimension::InstanceInteraction, "instance_interaction", "IInter", "Instance Interaction",
     "instance_interaction"},
    {Dimension::VisualReasoning, "visual_reasoning", "ViR", "Visual Reasoning",
     "visual_reasoning"},
    {Dimension::TextRecognition, "text_recognition", "TR", "Text Recognition",
     "text_understanding"},
}};

const DimensionInfo& info(Dimension d) {
  return kDimensionInfo[static_cast<std::size_t>(d)];
}

// Lowercase; spaces and hyphens become underscores.
std::string fold(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == ' ' || c == '-') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_wrapper(char c) { return c == '(' || c == ')' || c == '.'; }

}  // namespace

AnswerChoice AnswerChoice::from_letter(char letter) {
  if (letter < kFirst || letter > kLast) {
    throw MalformedLabel(fmt::format("not a choice label: '{}'", letter));
  }
  return AnswerChoice(letter);
}

AnswerChoice AnswerChoice::from_index(std::size_t index) {
  if (index >= kMaxChoices) {
    throw MalformedLabel(fmt::format("choice index {} out of range", index));
  }
  return AnswerChoice(static_cast<char>(kFirst + index));
}

std::optional<AnswerChoice> try_parse_choice(std::string_view text) noexcept {
  text = trim(text);
  while (!text.empty() && is_wrapper(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_wrapper(text.back())) text.remove_suffix(1);
  text = trim(text);
  if (text.size() != 1) return std::nullopt;
  char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text.front())));
  if (c < AnswerChoice::kFirst || c > AnswerChoice::kLast) return std::nullopt;
  return AnswerChoice::from_letter(c);
}

AnswerChoice parse_choice(std::string_view text) {
  if (auto c = try_parse_choice(text)) return *c;
  throw MalformedLabel(fmt::format("not a choice label: \"{}\"", text));
}

std::string Answer::str() const { return choice_ ? choice_->str() : "unparseable"; }

Answer Answer::from_str(std::string_view text) {
  if (text == "unparseable") return unparseable();
  return parse_choice(text);
}

std::string_view to_string(Dimension d) { return info(d).name; }
std::string_view abbreviation(Dimension d) { return info(d).abbrev; }
std::string_view display_name(Dimension d) { return info(d).display; }

std::optional<Dimension> dimension_from_string(std::string_view text) {
  const std::string key = fold(trim(text));
  for (const auto& d : kDimensionInfo) {
    if (key == d.name || key == fold(d.display) || key == fold(d.abbrev) || key == d.seed_name) {
      return d.dim;
    }
  }
  return std::nullopt;
}

Dimension parse_dimension(std::string_view text) {
  if (auto d = dimension_from_string(text)) return *d;
  throw UnknownDimension(
      fmt::format("unknown dimension \"{}\" (expected one of: {})", text, legal_dimension_names()));
}

std::string legal_dimension_names() {
  std::string out;
  for (const auto& d : kDimensionInfo) {
    if (!out.empty()) out += ", ";
    out += d.name;
  }
  return out;
}

std::string describe_image(const ImageSource& image) {
  struct Visitor {
    std::string operator()(const ImageFile& f) const { return "file:" + f.path.generic_string(); }
    std::string operator()(const InlineImage& i) const {
      return fmt::format("inline:{};{} base64 chars", i.media_type, i.base64_payload.size());
    }
    std::string operator()(const FixtureImage& f) const { return "fixture:" + f.key; }
  };
  return std::visit(Visitor{}, image);
}

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::Describer: return "describer";
    case AgentRole::ReasonerA: return "reasoner_a";
    case AgentRole::ReasonerB: return "reasoner_b";
    case AgentRole::Decider: return "decider";
    case AgentRole::Baseline: return "baseline";
  }
  return "?";
}

std::optional<AgentRole> role_from_string(std::string_view text) {
  for (auto r : {AgentRole::Describer, AgentRole::ReasonerA, AgentRole::ReasonerB,
                 AgentRole::Decider, AgentRole::Baseline}) {
    if (text == to_string(r)) return r;
  }
  return std::nullopt;
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Global: return "global";
    case Phase::Detailed: return "detailed";
    case Phase::Reasoning: return "reasoning";
    case Phase::Decision: return "decision";
    case Phase::Baseline: return "baseline";
  }
  return "?";
}

std::optional<Phase> phase_from_string(std::string_view text) {
  for (auto p : {Phase::Global, Phase::Detailed, Phase::Reasoning, Phase::Decision,
                 Phase::Baseline}) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Consensus: return "consensus";
    case Termination::RoundCapVote: return "round_cap_vote";
    case Termination::Adjudicated: return "adjudicated";
  }
  return "?";
}

std::optional<Termination> termination_from_string(std::string_view text) {
  for (auto t : {Termination::Consensus, Termination::RoundCapVote, Termination::Adjudicated}) {
    if (text == to_string(t)) return t;
  }
  return std::nullopt;
}

void BenchItem::validate() const {
  auto fail = [this](std::string_view why) {
    throw InvalidItem(fmt::format("item \"{}\": {}", id, why));
  };
  if (id.empty()) fail("empty id");
  if (trim(question).empty()) fail("empty question");
  if (choices.size() < 2 || choices.size() > AnswerChoice::kMaxChoices) {
    fail(fmt::format("{} choices (need 2..{})", choices.size(), AnswerChoice::kMaxChoices));
  }
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (choices[i].label != AnswerChoice::from_index(i)) {
      fail(fmt::format("choice labels must be consecutive from A (found {} at position {})",
                       choices[i].label.letter(), i + 1));
    }
  }
  if (!has_label(answer_key)) {
    fail(fmt::format("answer key {} is not among the choices", answer_key.letter()));
  }
  struct ImageCheck {
    const char* operator()(const ImageFile& f) const {
      return f.path.empty() ? "empty image path" : nullptr;
    }
    const char* operator()(const InlineImage& i) const {
      if (i.media_type != "image/png" && i.media_type != "image/jpeg") {
        return "inline image needs media type image/png or image/jpeg";
      }
      return i.base64_payload.empty() ? "empty inline image payload" : nullptr;
    }
    const char* operator()(const FixtureImage& f) const {
      return f.key.empty() ? "empty fixture key" : nullptr;
    }
  };
  if (const char* why = std::visit(ImageCheck{}, image)) fail(why);
}

bool BenchItem::has_label(AnswerChoice label) const {
  return std::any_of(choices.begin(), choices.end(),
                     [label](const Choice& c) { return c.label == label; });
}

std::vector<AnswerChoice> BenchItem::labels() const {
  std::vector<AnswerChoice> out;
  out.reserve(choices.size());
  for (const auto& c : choices) out.push_back(c.label);
  return out;
}

bool Transcript::phases_ordered() const {
  auto stage = [](AgentRole r) {
    switch (r) {
      case AgentRole::Describer: return 0;
      case AgentRole::ReasonerA:
      case AgentRole::ReasonerB: return 1;
      case AgentRole::Decider: return 2;
      case AgentRole::Baseline: return 3;
    }
    return 3;
  };
  int last_stage = 0;
  int last_round = 0;
  for (const auto& e : entries) {
    int s = stage(e.role);
    if (s < last_stage) return false;
    if (s == 1 && s == last_stage && e.round < last_round) return false;
    last_stage = s;
    last_round = e.round;
  }
  return count(AgentRole::Decider) <= 1;
}

std::size_t Transcript::count(AgentRole role) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [role](const TranscriptEntry& e) { return e.role == role; }));
}

}  // namespace visdebate
