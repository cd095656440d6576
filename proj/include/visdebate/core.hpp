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

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace visdebate {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedLabel : public Error {
 public:
  using Error::Error;
};

class UnknownDimension : public Error {
 public:
  using Error::Error;
};

class InvalidItem : public Error {
 public:
  using Error::Error;
};

/// A multiple-choice label in A..D.
class AnswerChoice {
 public:
  static constexpr char kFirst = 'A';
  static constexpr char kLast = 'D';
  static constexpr std::size_t kMaxChoices = kLast - kFirst + 1;

  /// Throws MalformedLabel unless `letter` is an uppercase A..D.
  static AnswerChoice from_letter(char letter);
  static AnswerChoice from_index(std::size_t index);

  char letter() const noexcept { return letter_; }
  std::size_t index() const noexcept { return static_cast<std::size_t>(letter_ - kFirst); }
  std::string str() const { return std::string(1, letter_); }

  auto operator<=>(const AnswerChoice&) const = default;

 private:
  explicit constexpr AnswerChoice(char letter) : letter_(letter) {}
  char letter_;
};

/// Normalizes "b", "(C)", " d. " and similar to a label. Throws MalformedLabel.
AnswerChoice parse_choice(std::string_view text);
std::optional<AnswerChoice> try_parse_choice(std::string_view text) noexcept;

/// An extracted answer: a label, or the explicit Unparseable marker. Voting
/// treats Unparseable as an abstention.
class Answer {
 public:
  Answer(AnswerChoice choice) : choice_(choice) {}  // NOLINT(google-explicit-constructor)
  static Answer unparseable() { return Answer(); }

  bool parsed() const noexcept { return choice_.has_value(); }
  const std::optional<AnswerChoice>& choice() const noexcept { return choice_; }
  AnswerChoice value() const { return choice_.value(); }

  /// "A".."D" or "unparseable".
  std::string str() const;
  static Answer from_str(std::string_view text);

  bool operator==(const Answer&) const = default;

 private:
  Answer() = default;
  std::optional<AnswerChoice> choice_;
};

enum class Dimension {
  SceneUnderstanding,
  InstanceIdentity,
  InstanceAttributes,
  InstanceLocation,
  InstanceCounting,
  SpatialRelation,
  InstanceInteraction,
  VisualReasoning,
  TextRecognition,
};

inline constexpr std::array<Dimension, 9> kAllDimensions = {
    Dimension::SceneUnderstanding, Dimension::InstanceIdentity,
    Dimension::InstanceAttributes, Dimension::InstanceLocation,
    Dimension::InstanceCounting,   Dimension::SpatialRelation,
    Dimension::InstanceInteraction, Dimension::VisualReasoning,
    Dimension::TextRecognition,
};

/// Canonical snake_case name, e.g. "scene_understanding".
std::string_view to_string(Dimension d);
/// Short column header, e.g. "SU", "IIden".
std::string_view abbreviation(Dimension d);
std::string_view display_name(Dimension d);

/// Accepts the canonical name, display name, column abbreviation and the
/// SEED-Bench question-type names, case- and separator-insensitively.
std::optional<Dimension> dimension_from_string(std::string_view text);
Dimension parse_dimension(std::string_view text);
/// "scene_understanding, instance_identity, ..." for diagnostics.
std::string legal_dimension_names();

struct ImageFile {
  std::filesystem::path path;
  bool operator==(const ImageFile&) const = default;
};

struct InlineImage {
  std::string media_type;  // image/png or image/jpeg
  std::string base64_payload;
  bool operator==(const InlineImage&) const = default;
};

/// Opaque key resolved only by the mock backend.
struct FixtureImage {
  std::string key;
  bool operator==(const FixtureImage&) const = default;
};

using ImageSource = std::variant<ImageFile, InlineImage, FixtureImage>;

/// Stable one-line reference used in transcripts: "file:<path>",
/// "inline:<media type>;<n> base64 chars", "fixture:<key>".
std::string describe_image(const ImageSource& image);

enum class AgentRole { Describer, ReasonerA, ReasonerB, Decider, Baseline };

std::string_view to_string(AgentRole role);
std::optional<AgentRole> role_from_string(std::string_view text);

/// Which kind of call an entry is; disambiguates the two describer calls.
enum class Phase { Global, Detailed, Reasoning, Decision, Baseline };

std::string_view to_string(Phase phase);
std::optional<Phase> phase_from_string(std::string_view text);

struct Choice {
  AnswerChoice label;
  std::string text;
  bool operator==(const Choice&) const = default;
};

struct BenchItem {
  std::string id;
  Dimension dimension = Dimension::SceneUnderstanding;
  ImageSource image;
  std::string question;
  std::vector<Choice> choices;
  AnswerChoice answer_key = AnswerChoice::from_letter('A');

  /// Structural checks: non-empty id/question, 2..4 consecutive labels from
  /// A, answer key among them, non-empty image reference. Throws InvalidItem.
  void validate() const;

  bool has_label(AnswerChoice label) const;
  std::vector<AnswerChoice> labels() const;
};

struct AgentPosition {
  AgentRole role = AgentRole::ReasonerA;
  int round = 0;
  Answer answer = Answer::unparseable();
  std::string rationale;
};

struct TemplateRef {
  std::string id;
  std::string version;
  bool operator==(const TemplateRef&) const = default;
};

/// What was sent on one call, as recorded in a transcript.
struct RequestSnapshot {
  TemplateRef template_ref;
  std::string system;
  std::string user;
  std::string image;
  bool operator==(const RequestSnapshot&) const = default;
};

struct TranscriptEntry {
  AgentRole role = AgentRole::Describer;
  Phase phase = Phase::Global;
  int round = 0;
  RequestSnapshot request;
  std::string response;
  std::optional<Answer> answer;
  std::optional<std::string> error;
  int attempts = 1;
  bool operator==(const TranscriptEntry&) const = default;
};

enum class Termination { Consensus, RoundCapVote, Adjudicated };

std::string_view to_string(Termination t);
std::optional<Termination> termination_from_string(std::string_view text);

struct Transcript {
  std::string item_id;
  int trial_index = 0;
  std::vector<TranscriptEntry> entries;
  // Unset on a partial transcript from an aborted run.
  std::optional<AnswerChoice> verdict;
  std::optional<Termination> termination;
  int termination_round = 0;  // consensus round when termination == Consensus
  std::optional<std::string> failure;  // set when the run aborted

  /// Describer entries, then reasoner entries, then at most one decider
  /// entry; reasoner rounds non-decreasing.
  bool phases_ordered() const;
  std::size_t count(AgentRole role) const;

  bool operator==(const Transcript&) const = default;
};

}  // namespace visdebate
