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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "visdebate/orchestrator.hpp"

namespace visdebate::cli {

/// Exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Every option resolved as: command-line flag > config file > default.
struct Settings {
  std::string command;  // ask | bench | validate | inspect

  // Backend.
  std::string backend = "openai";  // openai | mock
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_s = 120;
  std::string mock_script;

  // Pipeline.
  std::string prompts_dir;
  int max_rounds = 3;
  std::string sentinel = "FINAL ANSWER:";
  bool decider_always_runs = false;
  double temperature = 0.2;
  int max_tokens = 1024;
  int retry_attempts = 3;
  int retry_delay_ms = 500;
  double retry_multiplier = 2.0;

  // Evaluation.
  int trials = 3;
  int workers = 4;
  std::size_t sample = 0;  // items per dimension; 0 = all
  std::uint64_t seed = 0;
  bool baseline = false;
  std::string out_dir = "runs";

  // Positional / per-command.
  std::string dataset;
  std::string transcript;
  std::string image;
  std::string question;
  std::vector<std::string> choices;
  std::string item_id = "ask";

  PipelineConfig pipeline_config() const;
};

/// Thrown for bad invocations; `exit_code` is 0 for --help output.
class UsageError : public Error {
 public:
  UsageError(const std::string& message, int exit_code)
      : Error(message), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// `args` excludes the program name.
Settings parse_command_line(const std::vector<std::string>& args);

/// Parses and runs one command; returns the process exit code. `stop` drains
/// a running benchmark when set.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* stop = nullptr);

}  // namespace visdebate::cli
