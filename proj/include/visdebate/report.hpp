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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visdebate/harness.hpp"
#include "visdebate/rational.hpp"

namespace visdebate {

class MissingRecord : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

struct DimensionScore {
  std::size_t n_items = 0;
  std::size_t n_correct = 0;

  Rational accuracy() const;
  bool operator==(const DimensionScore&) const = default;
};

/// Per-dimension item counts. Dimensions without items are omitted. Throws
/// MissingRecord if a dataset item has no record (or a record names an item
/// outside the dataset).
std::map<Dimension, DimensionScore> dimension_scores(const std::vector<TrialRecord>& records,
                                                     const Dataset& dataset);
std::map<Dimension, Rational> dimension_accuracy(const std::vector<TrialRecord>& records,
                                                 const Dataset& dataset);

/// Unweighted mean over dimensions. Throws EmptyInput.
Rational task_average(const std::map<Dimension, Rational>& per_dimension);
Rational task_average(std::span<const Rational> values);

/// Total correct items over total items. Throws EmptyInput.
Rational micro_average(const std::map<Dimension, DimensionScore>& scores);

/// What produced a report; everything except the timestamps is part of the
/// deterministic report body.
struct ReportMetadata {
  std::string mode;  // "pipeline" or "baseline"
  std::string backend_id;
  std::string dataset;
  std::optional<std::size_t> sample_per_dimension;
  std::optional<std::uint64_t> seed;
  int n_trials = 3;
  bool complete = true;
  std::map<std::string, std::string> templates;
  nlohmann::json config = nlohmann::json::object();

  bool operator==(const ReportMetadata&) const = default;
};

struct EvalReport {
  std::map<Dimension, DimensionScore> per_dimension;
  Rational task_average;
  Rational micro_average;
  ReportMetadata metadata;
  std::string started_at;
  std::string finished_at;

  bool operator==(const EvalReport&) const = default;
};

inline constexpr const char* kReportSchema = "visdebate.report/1";

EvalReport build_report(const std::vector<TrialRecord>& records, const Dataset& dataset,
                        ReportMetadata metadata);

/// Timestamp-free body.
nlohmann::json report_body_json(const EvalReport& report);
/// {"report": body, "run": {"started_at", "finished_at"}}
nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

/// Layout: Model | SU | IIden | ... | TR | Average. Per-dimension
/// percentages to one decimal, average to two; "-" for absent dimensions.
std::string format_table(const EvalReport& report, const std::string& row_label);

/// Writes report.json and report.txt into `dir`.
void write_report_files(const EvalReport& report, const std::filesystem::path& dir,
                        const std::string& row_label);
EvalReport read_report(const std::filesystem::path& report_json);

/// One JSON object per line, sorted by item id.
void write_records(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_records(const std::filesystem::path& path);

/// build_report + write_report_files.
EvalReport emit_report(const std::vector<TrialRecord>& records, const Dataset& dataset,
                       ReportMetadata metadata, const std::filesystem::path& dir,
                       const std::string& row_label);

}  // namespace visdebate
