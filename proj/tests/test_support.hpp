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
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "visdebate/core.hpp"
#include "visdebate/mock_backend.hpp"
#include "visdebate/orchestrator.hpp"
#include "visdebate/prompts.hpp"

namespace visdebate::testing {

inline std::filesystem::path data_path(const std::string& relative) {
  return std::filesystem::path(VISDEBATE_TEST_DATA_DIR) / relative;
}

inline std::filesystem::path prompts_dir() { return VISDEBATE_PROMPTS_DIR; }

inline const PromptCatalogue& catalogue() {
  static const PromptCatalogue c = PromptCatalogue::load(prompts_dir());
  return c;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("visdebate-test-{}-{}", rd(), counter.fetch_add(1));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline BenchItem make_item(std::string id, char key = 'A', std::size_t n_choices = 4,
                           Dimension dim = Dimension::SceneUnderstanding) {
  BenchItem item;
  item.id = std::move(id);
  item.dimension = dim;
  item.image = FixtureImage{"img-" + item.id};
  item.question = "What is shown in the picture for " + item.id + "?";
  static const char* texts[] = {"a cat", "a dog", "a bird", "a fish"};
  for (std::size_t i = 0; i < n_choices; ++i) {
    item.choices.push_back({AnswerChoice::from_index(i), texts[i]});
  }
  item.answer_key = AnswerChoice::from_letter(key);
  return item;
}

/// Config without retry delays.
inline PipelineConfig fast_config(int max_rounds = 3, bool decider_always_runs = false) {
  PipelineConfig c;
  c.max_rounds = max_rounds;
  c.decider_always_runs = decider_always_runs;
  c.retry.base_delay = std::chrono::milliseconds(0);
  return c;
}

/// A response that commits to `letter`, or rambles without an answer when
/// `letter` is 0.
inline std::string say(char letter) {
  if (letter == 0) return "I cannot tell from the description what this is.";
  return fmt::format("Weighing the evidence in the descriptions.\nFINAL ANSWER: {}", letter);
}

/// Builds mock scripts for one item.
class ScriptBuilder {
 public:
  explicit ScriptBuilder(std::string item_id) : item_(std::move(item_id)) {
    describer(Phase::Global, "A wide view of the scene.");
    describer(Phase::Detailed, "A close look at the key region.");
  }

  ScriptBuilder& describer(Phase phase, std::string text,
                           std::optional<int> trial = std::nullopt) {
    script_.add({AgentRole::Describer, phase, 0, item_, trial, std::move(text)});
    return *this;
  }
  ScriptBuilder& reasoner(AgentRole role, std::optional<int> round, std::string text,
                          std::optional<int> trial = std::nullopt) {
    script_.add({role, std::nullopt, round, item_, trial, std::move(text)});
    return *this;
  }
  ScriptBuilder& both(std::optional<int> round, char a, char b,
                      std::optional<int> trial = std::nullopt) {
    reasoner(AgentRole::ReasonerA, round, say(a), trial);
    reasoner(AgentRole::ReasonerB, round, say(b), trial);
    return *this;
  }
  ScriptBuilder& decider(std::string text, std::optional<int> trial = std::nullopt) {
    script_.add({AgentRole::Decider, std::nullopt, std::nullopt, item_, trial, std::move(text)});
    return *this;
  }
  ScriptBuilder& baseline(std::string text, std::optional<int> trial = std::nullopt) {
    script_.add({AgentRole::Baseline, std::nullopt, std::nullopt, item_, trial, std::move(text)});
    return *this;
  }
  MockScript build() const { return script_; }

  /// Adds this builder's rules to `other` (for multi-item scripts).
  void merge_into(MockScript& other) const {
    std::stringstream combined;
    other.write(combined);
    script_.write(combined);
    other = MockScript::parse(combined);
  }

 private:
  std::string item_;
  MockScript script_;
};

/// JSONL script in which every agent answers each item's key.
inline std::string always_correct_script(const std::vector<BenchItem>& items) {
  std::string out;
  for (const auto& item : items) {
    const std::string text = say(item.answer_key.letter());
    for (const char* role : {"describer", "reasoner_a", "reasoner_b", "decider", "baseline"}) {
      out += nlohmann::json{{"role", role},
                            {"round", "*"},
                            {"item_id", item.id},
                            {"trial", "*"},
                            {"response", text}}
                 .dump() +
             "\n";
    }
  }
  return out;
}

}  // namespace visdebate::testing
