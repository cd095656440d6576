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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "visdebate/core.hpp"
#include "visdebate/orchestrator.hpp"

namespace visdebate {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

enum class DatasetErrorKind { Parse, DuplicateId, UnknownDimension, MissingImage, InvalidItem };

std::string_view to_string(DatasetErrorKind kind);

struct Diagnostic {
  std::size_t line = 0;
  DatasetErrorKind kind = DatasetErrorKind::Parse;
  std::string message;

  std::string str() const;
};

class DatasetError : public Error {
 public:
  explicit DatasetError(Diagnostic diagnostic);
  const Diagnostic& diagnostic() const noexcept { return diagnostic_; }
  DatasetErrorKind kind() const noexcept { return diagnostic_.kind; }
  std::size_t line() const noexcept { return diagnostic_.line; }

 private:
  Diagnostic diagnostic_;
};

struct Dataset {
  std::vector<BenchItem> items;
  std::filesystem::path source;

  std::map<Dimension, std::size_t> counts() const;
  const BenchItem* find(const std::string& id) const;
};

/// Parses line-delimited item records (see docs/formats.md), collecting every
/// problem instead of stopping at the first. Image paths resolve against
/// `base_dir`. Items with diagnostics are left out of `out`.
std::vector<Diagnostic> parse_dataset(std::istream& in, const std::filesystem::path& base_dir,
                                      Dataset& out);
std::vector<Diagnostic> validate_dataset(const std::filesystem::path& path, Dataset* out = nullptr);

/// Throws DatasetError for the first problem found.
Dataset load_dataset(const std::filesystem::path& path);

/// Up to `per_dimension` items from each dimension, chosen by a seeded
/// shuffle; the result keeps dataset order.
Dataset sample_dataset(const Dataset& dataset, std::size_t per_dimension, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

struct TrialResult {
  std::optional<AnswerChoice> answer;
  std::optional<VerdictBasis> basis;
  bool correct = false;
  std::optional<std::string> error;
  std::string transcript_ref;

  bool operator==(const TrialResult&) const = default;
};

struct TrialRecord {
  std::string item_id;
  Dimension dimension = Dimension::SceneUnderstanding;
  std::vector<TrialResult> trials;
  bool item_correct = false;
  /// In-memory only; one per trial, partial for failed trials.
  std::vector<Transcript> transcripts;

  bool all_failed() const;
};

class AllTrialsFailed : public Error {
 public:
  explicit AllTrialsFailed(TrialRecord record);
  const TrialRecord& record() const noexcept { return record_; }

 private:
  TrialRecord record_;
};

/// Correct trials needed out of n: ceil(n / 2).
int majority_threshold(int n_trials);
bool score_trials(const std::vector<bool>& correct);

using TrialRunner = std::function<Verdict(const BenchItem&, int trial_index)>;

/// Runs `runner` n_trials (odd) times with trial indices 0..n-1. A trial that
/// throws counts as incorrect; AllTrialsFailed only if every trial throws.
TrialRecord run_trials(const BenchItem& item, const TrialRunner& runner, int n_trials = 3);

/// Same protocol, single direct call per trial.
TrialRecord run_baseline(const BenchItem& item, const Pipeline& pipeline, int n_trials = 3);

// ---------------------------------------------------------------------------
// Batch evaluation
// ---------------------------------------------------------------------------

struct EvaluationOptions {
  int n_trials = 3;
  int workers = 4;
  bool baseline = false;
  /// Checked before each item is started; set it to drain.
  const std::atomic<bool>* stop = nullptr;
  /// Called from worker threads, serialized.
  std::function<void(const TrialRecord&)> on_record;
};

struct EvaluationResult {
  std::vector<TrialRecord> records;  // sorted by item id
  bool complete = true;
};

/// Evaluates every item on a bounded pool of `workers` threads.
EvaluationResult evaluate(const Dataset& dataset, const Pipeline& pipeline,
                          const EvaluationOptions& options);

}  // namespace visdebate
