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

#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "visdebate/backend.hpp"
#include "visdebate/core.hpp"
#include "visdebate/prompts.hpp"

namespace visdebate {

struct PipelineConfig {
  int max_rounds = 3;
  std::string sentinel = "FINAL ANSWER:";
  /// Call the decider even when the reasoners reached consensus.
  bool decider_always_runs = false;
  RetryPolicy retry;
  Sampling sampling;

  void validate() const;
};

/// Snapshot recorded in transcripts and reports.
nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc);

/// Pulls the agent's choice out of free text: the token after the last
/// (case-insensitive) sentinel, else a lone label on the last non-empty
/// line. Anything outside `choices` is Unparseable. Never throws.
Answer extract_answer(std::string_view response, const std::vector<AnswerChoice>& choices,
                      std::string_view sentinel);

/// Both parseable and equal; rationale is ignored.
bool detect_consensus(const AgentPosition& a, const AgentPosition& b);

class AllAbstained : public Error {
 public:
  AllAbstained() : Error("every vote was unparseable") {}
};

class FallbackFailed : public Error {
 public:
  using Error::Error;
};

/// Result of a strict-majority count; `winner` is empty on NoMajority.
struct VoteResult {
  std::optional<AnswerChoice> winner;
  bool no_majority() const noexcept { return !winner.has_value(); }
};

/// Discards abstentions, then returns the label holding a strict majority of
/// the remaining votes. Throws AllAbstained if nothing remains.
VoteResult majority_vote(const std::vector<Answer>& votes);

enum class VerdictBasis { Consensus, MajorityVote, DeciderAdjudication, Direct };

std::string_view to_string(VerdictBasis basis);
std::optional<VerdictBasis> basis_from_string(std::string_view text);

struct Resolution {
  AnswerChoice answer;
  VerdictBasis basis;
};

/// Decide rule over final reasoner answers plus the decider's vote:
/// majority -> MajorityVote; three-way split or both reasoners abstaining ->
/// decider's answer (DeciderAdjudication); nothing usable -> FallbackFailed.
Resolution resolve_votes(const Answer& reasoner_a, const Answer& reasoner_b,
                         const Answer& decider);

struct DebateOutcome {
  AgentPosition reasoner_a;
  AgentPosition reasoner_b;
  int rounds_executed = 0;
  bool consensus = false;
};

struct Verdict {
  AnswerChoice answer;
  VerdictBasis basis;
  Transcript transcript;
};

/// Aborted run; carries what was logged before the failure and the cause.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& message, Transcript partial, std::exception_ptr cause);

  const Transcript& transcript() const noexcept { return transcript_; }
  std::exception_ptr cause() const noexcept { return cause_; }

  template <typename E>
  bool caused_by() const {
    try {
      std::rethrow_exception(cause_);
    } catch (const E&) {
      return true;
    } catch (...) {
      return false;
    }
  }

 private:
  Transcript transcript_;
  std::exception_ptr cause_;
};

/// State threaded through one run of one item.
struct RunContext {
  int trial_index = 0;
  Transcript transcript;
};

/// Describe -> adversarial debate -> decide over one backend. Holds no
/// mutable state; distinct runs may execute concurrently.
class Pipeline {
 public:
  Pipeline(Backend& backend, const PromptCatalogue& catalogue, PipelineConfig config,
           Sleeper sleeper = {});

  const PipelineConfig& config() const noexcept { return config_; }
  const PromptCatalogue& catalogue() const noexcept { return catalogue_; }

  /// Two calls, global then detailed, both round 0.
  SceneDescription describe(const BenchItem& item, RunContext& ctx) const;

  /// Round 1 independent; then A answers B, B answers the updated A, until
  /// consensus or max_rounds.
  DebateOutcome debate(const BenchItem& item, const SceneDescription& description,
                       RunContext& ctx) const;

  /// Skips the decider on consensus unless decider_always_runs. Finalizes
  /// the transcript's verdict and termination.
  Verdict decide(const BenchItem& item, const SceneDescription& description,
                 const DebateOutcome& outcome, RunContext& ctx) const;

  /// Full run. Throws PipelineError with the partial transcript.
  Verdict run(const BenchItem& item, int trial_index = 0) const;

  /// One direct question-answering call (no agents), same trial tagging.
  Verdict run_baseline(const BenchItem& item, int trial_index = 0) const;

 private:
  struct CallResult {
    std::string text;
    Answer answer;
  };

  CallResult call(const BenchItem& item, const ChatRequest& request, RunContext& ctx,
                  bool extract) const;
  PromptContext prompt_context(const RunContext& ctx) const;

  Backend& backend_;
  const PromptCatalogue& catalogue_;
  PipelineConfig config_;
  Sleeper sleeper_;
};

}  // namespace visdebate
