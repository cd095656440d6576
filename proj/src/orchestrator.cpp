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

#include "visdebate/orchestrator.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include <fmt/format.h>

namespace visdebate {

using nlohmann::json;

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

// Offset of the last case-insensitive occurrence of `needle`, or npos.
std::size_t rfind_icase(std::string_view hay, std::string_view needle) {
  if (needle.empty() || needle.size() > hay.size()) return std::string_view::npos;
  for (std::size_t i = hay.size() - needle.size() + 1; i-- > 0;) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (lower(hay[i + j]) != lower(needle[j])) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::string_view::npos;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_decoration(char c) {
  static constexpr std::string_view kDecorations = "*_`\"'[](){}:,.;!?";
  return kDecorations.find(c) != std::string_view::npos;
}

std::string_view strip_decorations(std::string_view token) {
  while (!token.empty() && is_decoration(token.front())) token.remove_prefix(1);
  while (!token.empty() && is_decoration(token.back())) token.remove_suffix(1);
  return token;
}

std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (is_space(text[i]) || text[i] == ',')) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i]) && text[i] != ',') ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::string_view last_nonempty_line(std::string_view text) {
  std::size_t end = text.size();
  while (end > 0) {
    std::size_t start = text.rfind('\n', end - 1);
    start = start == std::string_view::npos ? 0 : start + 1;
    std::string_view line = text.substr(start, end - start);
    if (std::any_of(line.begin(), line.end(), [](char c) { return !is_space(c); })) return line;
    if (start == 0) break;
    end = start - 1;
  }
  return {};
}

// A lone label on the last line. Bare uppercase letters count anywhere;
// lowercase ones only when bracketed or as the line's final token, since a
// bare "a" is usually the article.
std::optional<AnswerChoice> scan_last_line(std::string_view text) {
  const auto tokens = split_tokens(last_nonempty_line(text));
  std::optional<AnswerChoice> found;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string_view raw = tokens[i];
    const std::string_view core = strip_decorations(raw);
    if (core.size() != 1) continue;
    const char c = core.front();
    const bool upper = c >= AnswerChoice::kFirst && c <= AnswerChoice::kLast;
    const bool bracketed = raw.front() == '(' || raw.front() == '[';
    const bool lower_ok = c >= 'a' && c <= 'd' && (bracketed || i + 1 == tokens.size());
    if (!upper && !lower_ok) continue;
    const auto label = AnswerChoice::from_letter(upper ? c : static_cast<char>(c - 'a' + 'A'));
    if (found && *found != label) return std::nullopt;
    found = label;
  }
  return found;
}

Answer within(const std::optional<AnswerChoice>& label, const std::vector<AnswerChoice>& choices) {
  if (label && std::find(choices.begin(), choices.end(), *label) != choices.end()) return *label;
  return Answer::unparseable();
}

}  // namespace

void PipelineConfig::validate() const {
  if (max_rounds < 1) throw Error("max_rounds must be >= 1");
  if (sentinel.empty()) throw Error("sentinel must not be empty");
  retry.validate();
  if (!(sampling.temperature >= 0.0)) throw Error("temperature must be >= 0");
  if (sampling.max_output_tokens <= 0) throw Error("max_output_tokens must be positive");
}

json to_json(const PipelineConfig& config) {
  return json{{"max_rounds", config.max_rounds},
              {"sentinel", config.sentinel},
              {"decider_always_runs", config.decider_always_runs},
              {"retry",
               {{"max_attempts", config.retry.max_attempts},
                {"base_delay_ms", config.retry.base_delay.count()},
                {"backoff_multiplier", config.retry.backoff_multiplier}}},
              {"sampling",
               {{"temperature", config.sampling.temperature},
                {"max_output_tokens", config.sampling.max_output_tokens}}}};
}

PipelineConfig pipeline_config_from_json(const json& doc) {
  PipelineConfig c;
  c.max_rounds = doc.at("max_rounds").get<int>();
  c.sentinel = doc.at("sentinel").get<std::string>();
  c.decider_always_runs = doc.at("decider_always_runs").get<bool>();
  const json& r = doc.at("retry");
  c.retry.max_attempts = r.at("max_attempts").get<int>();
  c.retry.base_delay = std::chrono::milliseconds(r.at("base_delay_ms").get<std::int64_t>());
  c.retry.backoff_multiplier = r.at("backoff_multiplier").get<double>();
  const json& s = doc.at("sampling");
  c.sampling.temperature = s.at("temperature").get<double>();
  c.sampling.max_output_tokens = s.at("max_output_tokens").get<int>();
  return c;
}

Answer extract_answer(std::string_view response, const std::vector<AnswerChoice>& choices,
                      std::string_view sentinel) {
  if (const auto at = rfind_icase(response, sentinel); at != std::string_view::npos) {
    const auto tokens = split_tokens(response.substr(at + sentinel.size()));
    if (!tokens.empty()) {
      if (auto label = try_parse_choice(strip_decorations(tokens.front()))) {
        return within(label, choices);
      }
    }
  }
  return within(scan_last_line(response), choices);
}

bool detect_consensus(const AgentPosition& a, const AgentPosition& b) {
  return a.answer.parsed() && a.answer == b.answer;
}

VoteResult majority_vote(const std::vector<Answer>& votes) {
  std::map<AnswerChoice, std::size_t> tally;
  std::size_t counted = 0;
  for (const auto& v : votes) {
    if (!v.parsed()) continue;
    ++tally[v.value()];
    ++counted;
  }
  if (counted == 0) throw AllAbstained();
  for (const auto& [label, n] : tally) {
    if (2 * n > counted) return VoteResult{label};
  }
  return VoteResult{};
}

std::string_view to_string(VerdictBasis basis) {
  switch (basis) {
    case VerdictBasis::Consensus: return "consensus";
    case VerdictBasis::MajorityVote: return "majority_vote";
    case VerdictBasis::DeciderAdjudication: return "decider_adjudication";
    case VerdictBasis::Direct: return "direct";
  }
  return "?";
}

std::optional<VerdictBasis> basis_from_string(std::string_view text) {
  for (auto b : {VerdictBasis::Consensus, VerdictBasis::MajorityVote,
                 VerdictBasis::DeciderAdjudication, VerdictBasis::Direct}) {
    if (text == to_string(b)) return b;
  }
  return std::nullopt;
}

Resolution resolve_votes(const Answer& reasoner_a, const Answer& reasoner_b,
                         const Answer& decider) {
  auto adjudicate = [&]() {
    if (!decider.parsed()) {
      throw FallbackFailed(fmt::format("no usable answer: reasoners {}/{}, decider unparseable",
                                       reasoner_a.str(), reasoner_b.str()));
    }
    return Resolution{decider.value(), VerdictBasis::DeciderAdjudication};
  };
  if (!reasoner_a.parsed() && !reasoner_b.parsed()) return adjudicate();
  const VoteResult vote = majority_vote({reasoner_a, reasoner_b, decider});
  if (vote.no_majority()) return adjudicate();
  return Resolution{*vote.winner, VerdictBasis::MajorityVote};
}

PipelineError::PipelineError(const std::string& message, Transcript partial,
                             std::exception_ptr cause)
    : Error(message), transcript_(std::move(partial)), cause_(std::move(cause)) {}

Pipeline::Pipeline(Backend& backend, const PromptCatalogue& catalogue, PipelineConfig config,
                   Sleeper sleeper)
    : backend_(backend),
      catalogue_(catalogue),
      config_(std::move(config)),
      sleeper_(std::move(sleeper)) {
  config_.validate();
}

PromptContext Pipeline::prompt_context(const RunContext& ctx) const {
  return PromptContext{&catalogue_, config_.sentinel, config_.sampling, ctx.trial_index};
}

Pipeline::CallResult Pipeline::call(const BenchItem& item, const ChatRequest& request,
                                    RunContext& ctx, bool extract) const {
  TranscriptEntry entry;
  entry.role = request.tags.role;
  entry.phase = request.tags.phase;
  entry.round = request.tags.round;
  entry.request = request.snapshot();
  try {
    RetryOutcome out = complete_with_retry(backend_, request, config_.retry, sleeper_);
    entry.attempts = out.attempts;
    entry.response = std::move(out.response.text);
  } catch (const BackendError& e) {
    entry.attempts = e.attempts();
    entry.error = e.what();
    ctx.transcript.entries.push_back(std::move(entry));
    throw;
  }
  Answer answer = Answer::unparseable();
  if (extract) {
    answer = extract_answer(entry.response, item.labels(), config_.sentinel);
    entry.answer = answer;
  }
  ctx.transcript.entries.push_back(entry);
  return CallResult{std::move(entry.response), answer};
}

SceneDescription Pipeline::describe(const BenchItem& item, RunContext& ctx) const {
  const PromptContext pc = prompt_context(ctx);
  SceneDescription out;
  out.global_view =
      call(item, build_description_prompt(item, DescriptionMode::Global, pc), ctx, false).text;
  out.detailed_view =
      call(item, build_description_prompt(item, DescriptionMode::Detailed, pc), ctx, false).text;
  return out;
}

DebateOutcome Pipeline::debate(const BenchItem& item, const SceneDescription& description,
                               RunContext& ctx) const {
  const PromptContext pc = prompt_context(ctx);
  auto turn = [&](AgentRole role, int round, const std::optional<AgentPosition>& self,
                  const std::optional<AgentPosition>& opponent) {
    auto result = call(item,
                       build_reasoning_prompt(item, description, role, round, self, opponent, pc),
                       ctx, true);
    return AgentPosition{role, round, result.answer, std::move(result.text)};
  };

  DebateOutcome out;
  out.reasoner_a = turn(AgentRole::ReasonerA, 1, std::nullopt, std::nullopt);
  out.reasoner_b = turn(AgentRole::ReasonerB, 1, std::nullopt, std::nullopt);
  out.rounds_executed = 1;
  out.consensus = detect_consensus(out.reasoner_a, out.reasoner_b);
  for (int round = 2; !out.consensus && round <= config_.max_rounds; ++round) {
    out.reasoner_a = turn(AgentRole::ReasonerA, round, out.reasoner_a, out.reasoner_b);
    out.reasoner_b = turn(AgentRole::ReasonerB, round, out.reasoner_b, out.reasoner_a);
    out.rounds_executed = round;
    out.consensus = detect_consensus(out.reasoner_a, out.reasoner_b);
  }
  return out;
}

Verdict Pipeline::decide(const BenchItem& item, const SceneDescription& description,
                         const DebateOutcome& outcome, RunContext& ctx) const {
  Transcript& t = ctx.transcript;
  if (outcome.consensus && !config_.decider_always_runs) {
    t.verdict = outcome.reasoner_a.answer.value();
    t.termination = Termination::Consensus;
    t.termination_round = outcome.rounds_executed;
    return Verdict{*t.verdict, VerdictBasis::Consensus, t};
  }
  const auto decider = call(
      item,
      build_decision_prompt(item, description, outcome.reasoner_a, outcome.reasoner_b,
                            prompt_context(ctx)),
      ctx, true);
  const Resolution r =
      resolve_votes(outcome.reasoner_a.answer, outcome.reasoner_b.answer, decider.answer);
  t.verdict = r.answer;
  if (outcome.consensus) {
    t.termination = Termination::Consensus;
    t.termination_round = outcome.rounds_executed;
  } else {
    t.termination = r.basis == VerdictBasis::MajorityVote ? Termination::RoundCapVote
                                                          : Termination::Adjudicated;
    t.termination_round = 0;
  }
  return Verdict{r.answer, r.basis, t};
}

Verdict Pipeline::run(const BenchItem& item, int trial_index) const {
  RunContext ctx;
  ctx.trial_index = trial_index;
  ctx.transcript.item_id = item.id;
  ctx.transcript.trial_index = trial_index;
  try {
    item.validate();
    const SceneDescription description = describe(item, ctx);
    const DebateOutcome outcome = debate(item, description, ctx);
    return decide(item, description, outcome, ctx);
  } catch (const std::exception& e) {
    ctx.transcript.failure = e.what();
    throw PipelineError(fmt::format("item \"{}\" trial {}: {}", item.id, trial_index, e.what()),
                        std::move(ctx.transcript), std::current_exception());
  }
}

Verdict Pipeline::run_baseline(const BenchItem& item, int trial_index) const {
  RunContext ctx;
  ctx.trial_index = trial_index;
  ctx.transcript.item_id = item.id;
  ctx.transcript.trial_index = trial_index;
  try {
    item.validate();
    const auto result = call(item, build_baseline_prompt(item, prompt_context(ctx)), ctx, true);
    if (!result.answer.parsed()) {
      throw FallbackFailed("baseline answer is unparseable");
    }
    ctx.transcript.verdict = result.answer.value();
    return Verdict{result.answer.value(), VerdictBasis::Direct, ctx.transcript};
  } catch (const std::exception& e) {
    ctx.transcript.failure = e.what();
    throw PipelineError(fmt::format("item \"{}\" trial {}: {}", item.id, trial_index, e.what()),
                        std::move(ctx.transcript), std::current_exception());
  }
}

}  // namespace visdebate
