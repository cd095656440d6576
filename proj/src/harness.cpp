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

#include "visdebate/harness.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <mutex>
#include <random>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "visdebate/worker_pool.hpp"

namespace visdebate {

using nlohmann::json;

namespace {

std::string get_string(const json& record, const char* field) {
  if (!record.contains(field) || !record[field].is_string()) {
    throw DatasetError(Diagnostic{0, DatasetErrorKind::Parse,
                                  fmt::format("missing string field \"{}\"", field)});
  }
  return record[field].get<std::string>();
}

ImageSource parse_image(const json& v, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return ImageFile{path.is_absolute() ? path : base_dir / path};
  };
  if (v.is_string()) return resolve(v.get<std::string>());
  if (v.is_object()) {
    if (v.contains("path") && v["path"].is_string()) return resolve(v["path"].get<std::string>());
    if (v.contains("fixture") && v["fixture"].is_string()) {
      return FixtureImage{v["fixture"].get<std::string>()};
    }
    if (v.contains("inline") && v["inline"].is_string()) {
      return InlineImage{v.value("media_type", ""), v["inline"].get<std::string>()};
    }
  }
  throw DatasetError(Diagnostic{0, DatasetErrorKind::Parse,
                                "\"image\" must be a path or {path|fixture|inline}"});
}

std::vector<Choice> parse_choices(const json& v) {
  std::vector<Choice> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string() || i >= AnswerChoice::kMaxChoices) {
        throw DatasetError(Diagnostic{0, DatasetErrorKind::InvalidItem,
                                      "\"choices\" must hold 2 to 4 strings"});
      }
      out.push_back(Choice{AnswerChoice::from_index(i), v[i].get<std::string>()});
    }
    return out;
  }
  if (v.is_object()) {
    // nlohmann orders object keys, so labels come out sorted.
    for (const auto& [label, text] : v.items()) {
      const auto parsed = label.size() == 1 ? try_parse_choice(label) : std::nullopt;
      if (!parsed || label[0] != parsed->letter() || !text.is_string()) {
        throw DatasetError(Diagnostic{0, DatasetErrorKind::InvalidItem,
                                      fmt::format("bad choice label \"{}\"", label)});
      }
      out.push_back(Choice{*parsed, text.get<std::string>()});
    }
    return out;
  }
  throw DatasetError(Diagnostic{0, DatasetErrorKind::Parse, "missing \"choices\""});
}

BenchItem parse_item(const json& record, const std::filesystem::path& base_dir) {
  if (!record.is_object()) {
    throw DatasetError(Diagnostic{0, DatasetErrorKind::Parse, "record is not a JSON object"});
  }
  BenchItem item;
  item.id = get_string(record, "id");
  const std::string dim = get_string(record, "dimension");
  const auto d = dimension_from_string(dim);
  if (!d) {
    throw DatasetError(Diagnostic{
        0, DatasetErrorKind::UnknownDimension,
        fmt::format("unknown dimension \"{}\" (expected one of: {})", dim,
                    legal_dimension_names())});
  }
  item.dimension = *d;
  if (!record.contains("image")) {
    throw DatasetError(Diagnostic{0, DatasetErrorKind::MissingImage, "missing \"image\""});
  }
  item.image = parse_image(record["image"], base_dir);
  item.question = get_string(record, "question");
  item.choices = parse_choices(record.value("choices", json()));
  const std::string key = get_string(record, "answer");
  const auto label = try_parse_choice(key);
  if (!label) {
    throw DatasetError(Diagnostic{0, DatasetErrorKind::InvalidItem,
                                  fmt::format("answer \"{}\" is not a choice label", key)});
  }
  item.answer_key = *label;
  try {
    item.validate();
  } catch (const InvalidItem& e) {
    throw DatasetError(Diagnostic{0, DatasetErrorKind::InvalidItem, e.what()});
  }
  if (const auto* f = std::get_if<ImageFile>(&item.image)) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(f->path, ec);
    if (ec || size == 0) {
      throw DatasetError(Diagnostic{
          0, DatasetErrorKind::MissingImage,
          fmt::format("image {} {}", f->path.string(), ec ? "not found" : "is empty")});
    }
  }
  return item;
}

}  // namespace

std::string_view to_string(DatasetErrorKind kind) {
  switch (kind) {
    case DatasetErrorKind::Parse: return "parse error";
    case DatasetErrorKind::DuplicateId: return "duplicate id";
    case DatasetErrorKind::UnknownDimension: return "unknown dimension";
    case DatasetErrorKind::MissingImage: return "missing image";
    case DatasetErrorKind::InvalidItem: return "invalid item";
  }
  return "?";
}

std::string Diagnostic::str() const {
  return fmt::format("line {}: {}: {}", line, to_string(kind), message);
}

DatasetError::DatasetError(Diagnostic diagnostic)
    : Error(diagnostic.str()), diagnostic_(std::move(diagnostic)) {}

std::map<Dimension, std::size_t> Dataset::counts() const {
  std::map<Dimension, std::size_t> out;
  for (const auto& item : items) ++out[item.dimension];
  return out;
}

const BenchItem* Dataset::find(const std::string& id) const {
  auto it = std::find_if(items.begin(), items.end(),
                         [&](const BenchItem& item) { return item.id == id; });
  return it == items.end() ? nullptr : &*it;
}

std::vector<Diagnostic> parse_dataset(std::istream& in, const std::filesystem::path& base_dir,
                                      Dataset& out) {
  std::vector<Diagnostic> diagnostics;
  std::map<std::string, std::size_t> first_line;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json record;
      try {
        record = json::parse(text);
      } catch (const json::parse_error& e) {
        throw DatasetError(Diagnostic{0, DatasetErrorKind::Parse, e.what()});
      }
      BenchItem item = parse_item(record, base_dir);
      if (auto [it, inserted] = first_line.emplace(item.id, line); !inserted) {
        throw DatasetError(Diagnostic{
            0, DatasetErrorKind::DuplicateId,
            fmt::format("id \"{}\" already defined on line {}", item.id, it->second)});
      }
      out.items.push_back(std::move(item));
    } catch (const DatasetError& e) {
      Diagnostic d = e.diagnostic();
      d.line = line;
      diagnostics.push_back(std::move(d));
    } catch (const json::exception& e) {
      diagnostics.push_back(Diagnostic{line, DatasetErrorKind::Parse, e.what()});
    } catch (const Error& e) {
      diagnostics.push_back(Diagnostic{line, DatasetErrorKind::InvalidItem, e.what()});
    }
  }
  if (out.items.empty() && diagnostics.empty()) {
    diagnostics.push_back(Diagnostic{0, DatasetErrorKind::Parse, "dataset has no items"});
  }
  return diagnostics;
}

std::vector<Diagnostic> validate_dataset(const std::filesystem::path& path, Dataset* out) {
  std::ifstream in(path);
  if (!in) {
    return {Diagnostic{0, DatasetErrorKind::Parse, fmt::format("cannot open {}", path.string())}};
  }
  Dataset dataset;
  dataset.source = path;
  auto diagnostics = parse_dataset(in, path.parent_path(), dataset);
  if (out != nullptr) *out = std::move(dataset);
  return diagnostics;
}

Dataset load_dataset(const std::filesystem::path& path) {
  Dataset dataset;
  const auto diagnostics = validate_dataset(path, &dataset);
  if (!diagnostics.empty()) throw DatasetError(diagnostics.front());
  return dataset;
}

Dataset sample_dataset(const Dataset& dataset, std::size_t per_dimension, std::uint64_t seed) {
  std::map<Dimension, std::vector<std::size_t>> by_dim;
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    by_dim[dataset.items[i].dimension].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& [dim, indices] : by_dim) {
    const std::size_t take = std::min(per_dimension, indices.size());
    // Partial Fisher-Yates on raw engine output; stable across standard libraries.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (indices.size() - i));
      std::swap(indices[i], indices[j]);
    }
    chosen.insert(chosen.end(), indices.begin(), indices.begin() + static_cast<long>(take));
  }
  std::sort(chosen.begin(), chosen.end());
  Dataset out;
  out.source = dataset.source;
  for (std::size_t i : chosen) out.items.push_back(dataset.items[i]);
  return out;
}

bool TrialRecord::all_failed() const {
  return !trials.empty() &&
         std::all_of(trials.begin(), trials.end(), [](const TrialResult& t) { return t.error; });
}

AllTrialsFailed::AllTrialsFailed(TrialRecord record)
    : Error(fmt::format("all {} trials failed for item \"{}\"", record.trials.size(),
                        record.item_id)),
      record_(std::move(record)) {}

int majority_threshold(int n_trials) {
  if (n_trials < 1 || n_trials % 2 == 0) {
    throw Error(fmt::format("n_trials must be a positive odd number (got {})", n_trials));
  }
  return (n_trials + 1) / 2;
}

bool score_trials(const std::vector<bool>& correct) {
  const auto n = static_cast<int>(correct.size());
  return static_cast<int>(std::count(correct.begin(), correct.end(), true)) >=
         majority_threshold(n);
}

TrialRecord run_trials(const BenchItem& item, const TrialRunner& runner, int n_trials) {
  majority_threshold(n_trials);
  TrialRecord record;
  record.item_id = item.id;
  record.dimension = item.dimension;
  std::vector<bool> correct;
  for (int t = 0; t < n_trials; ++t) {
    TrialResult result;
    try {
      Verdict v = runner(item, t);
      result.answer = v.answer;
      result.basis = v.basis;
      result.correct = v.answer == item.answer_key;
      record.transcripts.push_back(std::move(v.transcript));
    } catch (const PipelineError& e) {
      result.error = e.what();
      record.transcripts.push_back(e.transcript());
    } catch (const std::exception& e) {
      result.error = e.what();
      Transcript partial;
      partial.item_id = item.id;
      partial.trial_index = t;
      partial.failure = e.what();
      record.transcripts.push_back(std::move(partial));
    }
    correct.push_back(result.correct);
    record.trials.push_back(std::move(result));
  }
  record.item_correct = score_trials(correct);
  if (record.all_failed()) throw AllTrialsFailed(std::move(record));
  return record;
}

TrialRecord run_baseline(const BenchItem& item, const Pipeline& pipeline, int n_trials) {
  return run_trials(
      item, [&pipeline](const BenchItem& i, int t) { return pipeline.run_baseline(i, t); },
      n_trials);
}

EvaluationResult evaluate(const Dataset& dataset, const Pipeline& pipeline,
                          const EvaluationOptions& options) {
  std::vector<std::optional<TrialRecord>> slots(dataset.items.size());
  std::mutex callback_mutex;
  const TrialRunner runner = [&](const BenchItem& item, int t) {
    return options.baseline ? pipeline.run_baseline(item, t) : pipeline.run(item, t);
  };
  run_bounded(
      dataset.items.size(), options.workers,
      [&](std::size_t i) {
        TrialRecord record;
        try {
          record = run_trials(dataset.items[i], runner, options.n_trials);
        } catch (const AllTrialsFailed& e) {
          record = e.record();
        }
        if (options.on_record) {
          std::lock_guard<std::mutex> lock(callback_mutex);
          options.on_record(record);
        }
        slots[i] = std::move(record);
      },
      options.stop);

  EvaluationResult result;
  for (auto& slot : slots) {
    if (slot) {
      result.records.push_back(std::move(*slot));
    } else {
      result.complete = false;
    }
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const TrialRecord& a, const TrialRecord& b) { return a.item_id < b.item_id; });
  return result;
}

}  // namespace visdebate
