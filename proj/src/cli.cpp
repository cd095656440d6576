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

#include "visdebate/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "visdebate/harness.hpp"
#include "visdebate/mock_backend.hpp"
#include "visdebate/openai_backend.hpp"
#include "visdebate/report.hpp"
#include "visdebate/transcript_io.hpp"

#ifndef VISDEBATE_DEFAULT_PROMPTS_DIR
#define VISDEBATE_DEFAULT_PROMPTS_DIR "prompts"
#endif

namespace visdebate::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::system_clock;

std::string iso_time(Clock::time_point t) {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(Clock::to_time_t(t)));
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string safe_name(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out;
}

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out << text;
    if (!out) throw Error(fmt::format("write failed: {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

/// Settings that shape results (no paths to outputs, no secrets).
json settings_snapshot(const Settings& s) {
  json backend = {{"kind", s.backend}};
  if (s.backend == "openai") {
    backend["endpoint"] = s.endpoint;
    backend["model"] = s.model;
    backend["api_key_env"] = s.api_key_env;
  } else {
    backend["mock_script"] = s.mock_script;
  }
  return json{{"pipeline", to_json(s.pipeline_config())},
              {"backend", std::move(backend)},
              {"trials", s.trials},
              {"baseline", s.baseline}};
}

fs::path make_run_dir(const Settings& s, Clock::time_point started) {
  const std::string stamp =
      fmt::format("{:%Y%m%dT%H%M%SZ}", fmt::gmtime(Clock::to_time_t(started)));
  const std::string base = fmt::format("{}-{}-{:08x}", s.command, stamp,
                                       fnv1a(settings_snapshot(s).dump()) & 0xffffffffULL);
  fs::path dir = fs::path(s.out_dir) / base;
  for (int n = 2; fs::exists(dir); ++n) dir = fs::path(s.out_dir) / fmt::format("{}-{}", base, n);
  fs::create_directories(dir / "transcripts");
  return dir;
}

struct Manifest {
  const Settings* settings = nullptr;
  std::vector<std::string> argv;
  std::string backend_id;
  fs::path dir;
  Clock::time_point started;
  int exit_status = kExitOk;
  bool complete = true;
  const CountingBackend* counter = nullptr;
  json extra = json::object();

  void write() const {
    json calls = {{"total", counter ? counter->total() : 0}};
    for (auto role : {AgentRole::Describer, AgentRole::ReasonerA, AgentRole::ReasonerB,
                      AgentRole::Decider, AgentRole::Baseline}) {
      calls[std::string(to_string(role))] = counter ? counter->calls(role) : 0;
    }
    json doc = {{"schema", "visdebate.manifest/1"},
                {"command", settings->command},
                {"argv", argv},
                {"config", settings_snapshot(*settings)},
                {"backend_id", backend_id},
                {"output_dir", dir.generic_string()},
                {"started_at", iso_time(started)},
                {"finished_at", iso_time(Clock::now())},
                {"exit_status", exit_status},
                {"complete", complete},
                {"backend_calls", std::move(calls)}};
    doc.update(extra);
    write_atomically(dir / "manifest.json", doc.dump(2) + "\n");
  }
};

std::unique_ptr<Backend> make_backend(const Settings& s) {
  if (s.backend == "mock") {
    if (s.mock_script.empty()) throw UsageError("--backend mock needs --mock-script", kExitUsage);
    return std::make_unique<MockBackend>(MockScript::load(s.mock_script));
  }
  OpenAIConfig c;
  c.endpoint = s.endpoint;
  c.model = s.model;
  c.api_key_env = s.api_key_env;
  c.timeout = std::chrono::seconds(s.timeout_s);
  return std::make_unique<OpenAIBackend>(std::move(c));
}

PromptCatalogue load_catalogue(const Settings& s) {
  return PromptCatalogue::load(s.prompts_dir.empty() ? fs::path(VISDEBATE_DEFAULT_PROMPTS_DIR)
                                                     : fs::path(s.prompts_dir));
}

TranscriptDocument transcript_document(const Transcript& t, const Pipeline& pipeline) {
  return TranscriptDocument{t, to_json(pipeline.config()), pipeline.catalogue().versions()};
}

int rounds_executed(const Transcript& t) {
  int rounds = 0;
  for (const auto& e : t.entries) {
    if (e.role == AgentRole::ReasonerA || e.role == AgentRole::ReasonerB) {
      rounds = std::max(rounds, e.round);
    }
  }
  return rounds;
}

int cmd_validate(const Settings& s, std::ostream& out, std::ostream& err) {
  Dataset dataset;
  const auto diagnostics = validate_dataset(s.dataset, &dataset);
  if (!diagnostics.empty()) {
    for (const auto& d : diagnostics) err << s.dataset << ": " << d.str() << "\n";
    err << fmt::format("{} problem(s) found\n", diagnostics.size());
    return kExitFailure;
  }
  out << fmt::format("OK, {} items, {} dimensions\n", dataset.items.size(),
                     dataset.counts().size());
  return kExitOk;
}

int cmd_inspect(const Settings& s, std::ostream& out, std::ostream& err) {
  try {
    out << format_transcript(read_transcript(s.transcript));
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_ask(const Settings& s, const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  if (s.choices.size() < 2 || s.choices.size() > AnswerChoice::kMaxChoices) {
    throw UsageError(fmt::format("ask needs 2 to {} --choice values (got {})",
                                 AnswerChoice::kMaxChoices, s.choices.size()),
                     kExitUsage);
  }
  BenchItem item;
  item.id = s.item_id;
  item.image = ImageFile{s.image};
  item.question = s.question;
  for (std::size_t i = 0; i < s.choices.size(); ++i) {
    item.choices.push_back(Choice{AnswerChoice::from_index(i), s.choices[i]});
  }
  // No key for ad-hoc questions; prompts never depend on it.
  item.answer_key = AnswerChoice::from_letter('A');
  try {
    item.validate();
  } catch (const InvalidItem& e) {
    throw UsageError(e.what(), kExitUsage);
  }

  auto backend = make_backend(s);
  CountingBackend counter(*backend);
  const PromptCatalogue catalogue = load_catalogue(s);
  const Pipeline pipeline(counter, catalogue, s.pipeline_config());

  Manifest manifest{&s, argv, counter.id(), {}, Clock::now()};
  manifest.counter = &counter;
  manifest.dir = make_run_dir(s, manifest.started);
  const fs::path transcript_path =
      manifest.dir / "transcripts" / (safe_name(item.id) + "_t0.json");

  try {
    const Verdict v = pipeline.run(item, 0);
    write_transcript(transcript_path, transcript_document(v.transcript, pipeline));
    const auto& choice = item.choices[v.answer.index()];
    out << fmt::format("verdict: ({}) {}\n", v.answer.letter(), choice.text);
    out << fmt::format("basis: {}\n", to_string(v.basis));
    out << fmt::format("rounds: {}\n", rounds_executed(v.transcript));
    out << fmt::format("transcript: {}\n", transcript_path.generic_string());
    manifest.extra = {{"verdict", v.answer.str()}, {"basis", to_string(v.basis)}};
    manifest.write();
    return kExitOk;
  } catch (const PipelineError& e) {
    write_transcript(transcript_path, transcript_document(e.transcript(), pipeline));
    err << "error: " << e.what() << "\n";
    err << fmt::format("partial transcript: {}\n", transcript_path.generic_string());
    manifest.exit_status = kExitFailure;
    manifest.complete = false;
    manifest.write();
    return kExitFailure;
  }
}

int cmd_bench(const Settings& s, const std::vector<std::string>& argv, std::ostream& out,
              std::ostream& err, const std::atomic<bool>* stop) {
  Dataset dataset;
  const auto diagnostics = validate_dataset(s.dataset, &dataset);
  if (!diagnostics.empty()) {
    for (const auto& d : diagnostics) err << s.dataset << ": " << d.str() << "\n";
    return kExitFailure;
  }
  if (s.sample > 0) dataset = sample_dataset(dataset, s.sample, s.seed);

  auto backend = make_backend(s);
  CountingBackend counter(*backend);
  const PromptCatalogue catalogue = load_catalogue(s);
  const Pipeline pipeline(counter, catalogue, s.pipeline_config());

  Manifest manifest{&s, argv, counter.id(), {}, Clock::now()};
  manifest.counter = &counter;
  manifest.dir = make_run_dir(s, manifest.started);

  EvaluationOptions options;
  options.n_trials = s.trials;
  options.workers = s.workers;
  options.baseline = s.baseline;
  options.stop = stop;
  EvaluationResult result = evaluate(dataset, pipeline, options);

  std::size_t failed_items = 0;
  for (auto& record : result.records) {
    if (record.all_failed()) ++failed_items;
    for (std::size_t t = 0; t < record.trials.size(); ++t) {
      const std::string name = fmt::format("{}_t{}.json", safe_name(record.item_id), t);
      write_transcript(manifest.dir / "transcripts" / name,
                       transcript_document(record.transcripts[t], pipeline));
      record.trials[t].transcript_ref = "transcripts/" + name;
    }
  }
  write_records(manifest.dir / "records.jsonl", result.records);

  // An interrupted run reports over the items that finished.
  Dataset scored = dataset;
  if (!result.complete) {
    std::erase_if(scored.items, [&](const BenchItem& item) {
      return std::none_of(result.records.begin(), result.records.end(),
                          [&](const TrialRecord& r) { return r.item_id == item.id; });
    });
  }

  const std::string label = s.baseline ? "baseline" : "pipeline";
  manifest.complete = result.complete;
  manifest.extra = {{"dataset", s.dataset},
                    {"sample_per_dimension", s.sample > 0 ? json(s.sample) : json()},
                    {"seed", s.seed},
                    {"items", dataset.items.size()},
                    {"items_scored", result.records.size()},
                    {"all_trials_failed_items", failed_items}};
  if (scored.items.empty()) {
    err << "no items finished; no report written\n";
    manifest.exit_status = kExitFailure;
    manifest.write();
    return kExitFailure;
  }

  ReportMetadata meta;
  meta.mode = label;
  meta.backend_id = counter.id();
  meta.dataset = s.dataset;
  if (s.sample > 0) {
    meta.sample_per_dimension = s.sample;
    meta.seed = s.seed;
  }
  meta.n_trials = s.trials;
  meta.complete = result.complete;
  meta.templates = catalogue.versions();
  meta.config = settings_snapshot(s);
  EvalReport report = build_report(result.records, scored, std::move(meta));
  report.started_at = iso_time(manifest.started);
  report.finished_at = iso_time(Clock::now());
  write_report_files(report, manifest.dir, label);

  out << format_table(report, label);
  if (failed_items > 0) out << fmt::format("{} item(s) failed on every trial\n", failed_items);
  out << fmt::format("report: {}\n", manifest.dir.generic_string());

  manifest.exit_status = result.complete ? kExitOk : kExitFailure;
  manifest.write();
  if (!result.complete) err << "interrupted: partial report flagged incomplete\n";
  return manifest.exit_status;
}

}  // namespace

PipelineConfig Settings::pipeline_config() const {
  PipelineConfig c;
  c.max_rounds = max_rounds;
  c.sentinel = sentinel;
  c.decider_always_runs = decider_always_runs;
  c.retry.max_attempts = retry_attempts;
  c.retry.base_delay = std::chrono::milliseconds(retry_delay_ms);
  c.retry.backoff_multiplier = retry_multiplier;
  c.sampling.temperature = temperature;
  c.sampling.max_output_tokens = max_tokens;
  return c;
}

Settings parse_command_line(const std::vector<std::string>& args) {
  Settings s;
  CLI::App app{"Multi-agent visual question answering over vision-language models", "visdebate"};
  app.set_config("--config", "", "Read option defaults from an INI/TOML file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--backend", s.backend, "Model backend")
      ->check(CLI::IsMember({"openai", "mock"}))
      ->capture_default_str();
  app.add_option("--endpoint", s.endpoint, "OpenAI-compatible base URL")->capture_default_str();
  app.add_option("--model", s.model, "Model name")->capture_default_str();
  app.add_option("--api-key-env", s.api_key_env, "Environment variable holding the API token")
      ->capture_default_str();
  app.add_option("--timeout-s", s.timeout_s, "HTTP timeout in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--mock-script", s.mock_script, "Mock script (JSON Lines)");
  app.add_option("--prompts-dir", s.prompts_dir, "Prompt template directory");
  app.add_option("--max-rounds", s.max_rounds, "Debate round cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--sentinel", s.sentinel, "Answer marker agents must emit")
      ->capture_default_str();
  app.add_flag("--decider-always-runs", s.decider_always_runs,
               "Run the decision agent even on consensus");
  app.add_option("--temperature", s.temperature, "Sampling temperature")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--max-tokens", s.max_tokens, "Max output tokens per call")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--retry-attempts", s.retry_attempts, "Attempts per backend call")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--retry-delay-ms", s.retry_delay_ms, "Delay before the first retry")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--retry-multiplier", s.retry_multiplier, "Backoff multiplier (>= 1)")
      ->check(CLI::Range(1.0, 1e6))
      ->capture_default_str();
  app.add_option("--trials", s.trials, "Trials per question (odd)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--workers", s.workers, "Concurrent items")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--sample", s.sample, "Items per dimension to sample (0 = all)")
      ->capture_default_str();
  app.add_option("--seed", s.seed, "Sampling seed")->capture_default_str();
  app.add_flag("--baseline", s.baseline, "Single direct call per trial, no agents");
  app.add_option("--out", s.out_dir, "Directory for run outputs")->capture_default_str();

  auto* ask = app.add_subcommand("ask", "Answer one question about one image");
  ask->add_option("--image", s.image, "Image file")->required()->check(CLI::ExistingFile);
  ask->add_option("--question", s.question, "Question text")->required();
  ask->add_option("--choice", s.choices, "Answer option, repeat 2-4 times")->required();
  ask->add_option("--id", s.item_id, "Item id used in tags and file names")
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Evaluate a dataset and write a report");
  bench->add_option("dataset", s.dataset, "Dataset file (JSON Lines)")->required();

  auto* validate = app.add_subcommand("validate", "Check a dataset without calling any model");
  validate->add_option("dataset", s.dataset, "Dataset file (JSON Lines)")->required();

  auto* inspect = app.add_subcommand("inspect", "Pretty-print a transcript");
  inspect->add_option("transcript", s.transcript, "Transcript file")->required();

  std::vector<const char*> argv{"visdebate"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw UsageError(app.help(), kExitOk);
  } catch (const CLI::CallForAllHelp&) {
    throw UsageError(app.help("", CLI::AppFormatMode::All), kExitOk);
  } catch (const CLI::ParseError& e) {
    throw UsageError(fmt::format("{}\nRun with --help for usage.", e.what()), kExitUsage);
  }
  for (auto* sub : {ask, bench, validate, inspect}) {
    if (sub->parsed()) s.command = sub->get_name();
  }
  if (s.trials % 2 == 0) throw UsageError("--trials must be odd", kExitUsage);
  return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* stop) {
  try {
    const Settings s = parse_command_line(args);
    if (s.command == "validate") return cmd_validate(s, out, err);
    if (s.command == "inspect") return cmd_inspect(s, out, err);
    if (s.command == "ask") return cmd_ask(s, args, out, err);
    return cmd_bench(s, args, out, err, stop);
  } catch (const UsageError& e) {
    (e.exit_code() == kExitOk ? out : err) << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace visdebate::cli
