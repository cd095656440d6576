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
#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "visdebate/core.hpp"

namespace visdebate {

struct TextPart {
  std::string text;
};

struct ImagePart {
  ImageSource image;
};

using ContentPart = std::variant<TextPart, ImagePart>;

struct Sampling {
  double temperature = 0.2;
  int max_output_tokens = 1024;
};

/// Identifies one call within a trial.
struct CallTags {
  AgentRole role = AgentRole::Describer;
  Phase phase = Phase::Global;
  int round = 0;
  std::string item_id;
  int trial_index = 0;
};

struct ChatRequest {
  std::string system_prompt;
  std::vector<ContentPart> user_parts;
  Sampling sampling;
  CallTags tags;
  TemplateRef template_ref;

  /// At most one image part, temperature >= 0, max_output_tokens > 0.
  /// Throws BackendError(InvalidRequest).
  void validate() const;

  /// Text parts joined in order.
  std::string user_text() const;
  const ImageSource* image() const;
  RequestSnapshot snapshot() const;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  std::optional<Usage> usage;
  std::chrono::milliseconds latency{0};
};

enum class BackendErrorKind {
  Transport,
  RemoteRejection,
  RateLimited,
  ServerError,
  ScriptMiss,
  InvalidRequest,
  MalformedResponse,
  ExhaustedRetries,
};

std::string_view to_string(BackendErrorKind kind);

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& message,
               std::optional<int> http_status = std::nullopt);

  BackendErrorKind kind() const noexcept { return kind_; }
  std::optional<int> http_status() const noexcept { return http_status_; }
  /// Transport failures, rate limiting and 5xx responses.
  bool retryable() const noexcept;
  /// Backend attempts spent before this error surfaced.
  int attempts() const noexcept { return attempts_; }
  void set_attempts(int n) noexcept { attempts_ = n; }

 private:
  BackendErrorKind kind_;
  std::optional<int> http_status_;
  int attempts_ = 1;
};

/// Raised once max_attempts retryable failures in a row have occurred.
class ExhaustedRetries : public BackendError {
 public:
  ExhaustedRetries(const BackendError& last, int attempts);
  BackendErrorKind last_kind() const noexcept { return last_kind_; }

 private:
  BackendErrorKind last_kind_;
};

/// A vision-language model. Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double backoff_multiplier = 2.0;

  void validate() const;
  /// Delay between attempt k and k+1 (k >= 1): base_delay * multiplier^(k-1).
  std::chrono::milliseconds delay_after(int attempt) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct RetryOutcome {
  ChatResponse response;
  int attempts = 1;
};

/// Calls `backend` until success, a non-retryable error (rethrown as is), or
/// max_attempts retryable failures (ExhaustedRetries). `sleep` only blocks
/// the calling thread.
RetryOutcome complete_with_retry(Backend& backend, const ChatRequest& request,
                                 const RetryPolicy& policy, const Sleeper& sleep = {});

/// Decorator counting calls per role; thread-safe.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(Backend& inner) : inner_(inner) {}

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return inner_.id(); }

  std::size_t total() const noexcept;
  std::size_t calls(AgentRole role) const noexcept;

 private:
  Backend& inner_;
  std::array<std::atomic<std::size_t>, 5> per_role_{};
};

}  // namespace visdebate
