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

#include "visdebate/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace visdebate {

using nlohmann::json;

namespace {

json optional_json(const auto& v) { return v ? json(*v) : json(); }

json exact_and_percent(const Rational& value, int digits) {
  return json{{"exact", to_fraction_string(value)}, {"percent", format_percent(value, digits)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace

Rational DimensionScore::accuracy() const {
  if (n_items == 0) throw EmptyInput("dimension without items has no accuracy");
  return Rational(n_correct, n_items);
}

std::map<Dimension, DimensionScore> dimension_scores(const std::vector<TrialRecord>& records,
                                                     const Dataset& dataset) {
  std::map<std::string, const TrialRecord*> by_id;
  for (const auto& r : records) {
    if (dataset.find(r.item_id) == nullptr) {
      throw MissingRecord(fmt::format("record for \"{}\" matches no dataset item", r.item_id));
    }
    by_id.emplace(r.item_id, &r);
  }
  std::map<Dimension, DimensionScore> out;
  for (const auto& item : dataset.items) {
    auto it = by_id.find(item.id);
    if (it == by_id.end()) {
      throw MissingRecord(fmt::format("no trial record for item \"{}\"", item.id));
    }
    DimensionScore& s = out[item.dimension];
    ++s.n_items;
    if (it->second->item_correct) ++s.n_correct;
  }
  return out;
}

std::map<Dimension, Rational> dimension_accuracy(const std::vector<TrialRecord>& records,
                                                 const Dataset& dataset) {
  std::map<Dimension, Rational> out;
  for (const auto& [dim, score] : dimension_scores(records, dataset)) {
    out.emplace(dim, score.accuracy());
  }
  return out;
}

Rational task_average(std::span<const Rational> values) {
  if (values.empty()) throw EmptyInput("task average of no dimensions");
  Rational sum = 0;
  for (const auto& v : values) sum += v;
  return sum / static_cast<long>(values.size());
}

Rational task_average(const std::map<Dimension, Rational>& per_dimension) {
  std::vector<Rational> values;
  values.reserve(per_dimension.size());
  for (const auto& [dim, acc] : per_dimension) values.push_back(acc);
  return task_average(std::span<const Rational>(values));
}

Rational micro_average(const std::map<Dimension, DimensionScore>& scores) {
  std::size_t items = 0;
  std::size_t correct = 0;
  for (const auto& [dim, s] : scores) {
    items += s.n_items;
    correct += s.n_correct;
  }
  if (items == 0) throw EmptyInput("micro average of no items");
  return Rational(correct, items);
}

EvalReport build_report(const std::vector<TrialRecord>& records, const Dataset& dataset,
                        ReportMetadata metadata) {
  EvalReport report;
  report.per_dimension = dimension_scores(records, dataset);
  std::map<Dimension, Rational> acc;
  for (const auto& [dim, s] : report.per_dimension) acc.emplace(dim, s.accuracy());
  report.task_average = task_average(acc);
  report.micro_average = micro_average(report.per_dimension);
  report.metadata = std::move(metadata);
  return report;
}

json report_body_json(const EvalReport& report) {
  const ReportMetadata& m = report.metadata;
  json dims = json::array();
  for (const auto& [dim, s] : report.per_dimension) {
    dims.push_back({{"dimension", to_string(dim)},
                    {"abbrev", abbreviation(dim)},
                    {"n_items", s.n_items},
                    {"n_correct", s.n_correct},
                    {"accuracy", exact_and_percent(s.accuracy(), 1)}});
  }
  return json{{"schema", kReportSchema},
              {"metadata",
               {{"mode", m.mode},
                {"backend_id", m.backend_id},
                {"dataset", m.dataset},
                {"sample_per_dimension", optional_json(m.sample_per_dimension)},
                {"seed", optional_json(m.seed)},
                {"n_trials", m.n_trials},
                {"complete", m.complete},
                {"templates", m.templates},
                {"config", m.config}}},
              {"per_dimension", std::move(dims)},
              {"task_average", exact_and_percent(report.task_average, 2)},
              {"micro_average", exact_and_percent(report.micro_average, 2)}};
}

json to_json(const EvalReport& report) {
  return json{{"report", report_body_json(report)},
              {"run", {{"started_at", report.started_at}, {"finished_at", report.finished_at}}}};
}

EvalReport report_from_json(const json& doc) {
  EvalReport report;
  try {
    const json& body = doc.at("report");
    if (body.value("schema", "") != kReportSchema) {
      throw Error(fmt::format("not a report document (expected schema {})", kReportSchema));
    }
    const json& m = body.at("metadata");
    ReportMetadata& md = report.metadata;
    md.mode = m.at("mode").get<std::string>();
    md.backend_id = m.at("backend_id").get<std::string>();
    md.dataset = m.at("dataset").get<std::string>();
    if (!m.at("sample_per_dimension").is_null()) {
      md.sample_per_dimension = m["sample_per_dimension"].get<std::size_t>();
    }
    if (!m.at("seed").is_null()) md.seed = m["seed"].get<std::uint64_t>();
    md.n_trials = m.at("n_trials").get<int>();
    md.complete = m.at("complete").get<bool>();
    md.templates = m.at("templates").get<std::map<std::string, std::string>>();
    md.config = m.at("config");
    for (const json& d : body.at("per_dimension")) {
      const Dimension dim = parse_dimension(d.at("dimension").get<std::string>());
      report.per_dimension[dim] =
          DimensionScore{d.at("n_items").get<std::size_t>(), d.at("n_correct").get<std::size_t>()};
    }
    report.task_average = parse_rational(body.at("task_average").at("exact").get<std::string>());
    report.micro_average = parse_rational(body.at("micro_average").at("exact").get<std::string>());
    report.started_at = doc.at("run").at("started_at").get<std::string>();
    report.finished_at = doc.at("run").at("finished_at").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed report: {}", e.what()));
  }
  return report;
}

std::string format_table(const EvalReport& report, const std::string& row_label) {
  std::vector<std::string> header{"Model"};
  std::vector<std::string> row{row_label};
  for (Dimension d : kAllDimensions) {
    header.emplace_back(abbreviation(d));
    auto it = report.per_dimension.find(d);
    row.push_back(it == report.per_dimension.end()
                      ? "-"
                      : format_percent(it->second.accuracy(), 1) + "%");
  }
  header.emplace_back("Average");
  row.push_back(format_percent(report.task_average, 2) + "%");

  std::string sep = "+";
  std::string head = "|";
  std::string body = "|";
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::size_t w = std::max(header[i].size(), row[i].size());
    sep += std::string(w + 2, '-') + "+";
    head += fmt::format(" {:^{}} |", header[i], w);
    body += i == 0 ? fmt::format(" {:<{}} |", row[i], w) : fmt::format(" {:>{}} |", row[i], w);
  }
  std::string out = sep + "\n" + head + "\n" + sep + "\n" + body + "\n" + sep + "\n";
  out += fmt::format("micro-average: {}%  ({} trials per item, {})\n",
                     format_percent(report.micro_average, 2), report.metadata.n_trials,
                     report.metadata.complete ? "complete" : "INCOMPLETE");
  return out;
}

void write_report_files(const EvalReport& report, const std::filesystem::path& dir,
                        const std::string& row_label) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  write_text(dir / "report.txt", format_table(report, row_label));
}

EvalReport read_report(const std::filesystem::path& report_json) {
  return report_from_json(read_json(report_json));
}

void write_records(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  std::vector<const TrialRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const TrialRecord* a, const TrialRecord* b) { return a->item_id < b->item_id; });
  std::string text;
  for (const TrialRecord* r : sorted) {
    json trials = json::array();
    for (const auto& t : r->trials) {
      trials.push_back({{"answer", t.answer ? json(t.answer->str()) : json()},
                        {"basis", t.basis ? json(to_string(*t.basis)) : json()},
                        {"correct", t.correct},
                        {"error", optional_json(t.error)},
                        {"transcript", t.transcript_ref}});
    }
    text += json{{"item_id", r->item_id},
                 {"dimension", to_string(r->dimension)},
                 {"item_correct", r->item_correct},
                 {"trials", std::move(trials)}}
                .dump() +
            "\n";
  }
  write_text(path, text);
}

std::vector<TrialRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::vector<TrialRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json doc = json::parse(line);
      TrialRecord r;
      r.item_id = doc.at("item_id").get<std::string>();
      r.dimension = parse_dimension(doc.at("dimension").get<std::string>());
      r.item_correct = doc.at("item_correct").get<bool>();
      for (const json& t : doc.at("trials")) {
        TrialResult tr;
        if (!t.at("answer").is_null()) tr.answer = parse_choice(t["answer"].get<std::string>());
        if (!t.at("basis").is_null()) {
          tr.basis = basis_from_string(t["basis"].get<std::string>());
          if (!tr.basis) throw Error("unknown verdict basis");
        }
        tr.correct = t.at("correct").get<bool>();
        if (!t.at("error").is_null()) tr.error = t["error"].get<std::string>();
        tr.transcript_ref = t.at("transcript").get<std::string>();
        r.trials.push_back(std::move(tr));
      }
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

EvalReport emit_report(const std::vector<TrialRecord>& records, const Dataset& dataset,
                       ReportMetadata metadata, const std::filesystem::path& dir,
                       const std::string& row_label) {
  EvalReport report = build_report(records, dataset, std::move(metadata));
  write_report_files(report, dir, row_label);
  return report;
}

}  // namespace visdebate
