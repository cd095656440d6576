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

#include "visdebate/backend.hpp"

#include <cmath>
#include <thread>

#include <fmt/format.h>

namespace visdebate {

std::string_view to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::Transport: return "transport";
    case BackendErrorKind::RemoteRejection: return "remote_rejection";
    case BackendErrorKind::RateLimited: return "rate_limited";
    case BackendErrorKind::ServerError: return "server_error";
    case BackendErrorKind::ScriptMiss: return "script_miss";
    case BackendErrorKind::InvalidRequest: return "invalid_request";
    case BackendErrorKind::MalformedResponse: return "malformed_response";
    case BackendErrorKind::ExhaustedRetries: return "exhausted_retries";
  }
  return "?";
}

BackendError::BackendError(BackendErrorKind kind, const std::string& message,
                           std::optional<int> http_status)
    : Error(fmt::format("{}: {}", to_string(kind), message)),
      kind_(kind),
      http_status_(http_status) {}

bool BackendError::retryable() const noexcept {
  return kind_ == BackendErrorKind::Transport || kind_ == BackendErrorKind::RateLimited ||
         kind_ == BackendErrorKind::ServerError;
}

ExhaustedRetries::ExhaustedRetries(const BackendError& last, int attempts)
    : BackendError(BackendErrorKind::ExhaustedRetries,
                   fmt::format("gave up after {} attempts; last error: {}", attempts, last.what()),
                   last.http_status()),
      last_kind_(last.kind()) {
  set_attempts(attempts);
}

void ChatRequest::validate() const {
  std::size_t images = 0;
  for (const auto& part : user_parts) {
    if (std::holds_alternative<ImagePart>(part)) ++images;
  }
  if (images > 1) {
    throw BackendError(BackendErrorKind::InvalidRequest,
                       fmt::format("{} image parts (at most one allowed)", images));
  }
  if (!(sampling.temperature >= 0.0)) {
    throw BackendError(BackendErrorKind::InvalidRequest, "temperature must be >= 0");
  }
  if (sampling.max_output_tokens <= 0) {
    throw BackendError(BackendErrorKind::InvalidRequest, "max_output_tokens must be positive");
  }
}

std::string ChatRequest::user_text() const {
  std::string out;
  for (const auto& part : user_parts) {
    if (const auto* t = std::get_if<TextPart>(&part)) out += t->text;
  }
  return out;
}

const ImageSource* ChatRequest::image() const {
  for (const auto& part : user_parts) {
    if (const auto* i = std::get_if<ImagePart>(&part)) return &i->image;
  }
  return nullptr;
}

RequestSnapshot ChatRequest::snapshot() const {
  const ImageSource* img = image();
  return RequestSnapshot{template_ref, system_prompt, user_text(),
                         img ? describe_image(*img) : std::string()};
}

void RetryPolicy::validate() const {
  if (max_attempts < 1) throw Error("retry policy: max_attempts must be >= 1");
  if (base_delay.count() < 0) throw Error("retry policy: base_delay must be >= 0");
  if (!(backoff_multiplier >= 1.0)) throw Error("retry policy: backoff_multiplier must be >= 1");
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  const double factor = std::pow(backoff_multiplier, attempt - 1);
  return std::chrono::milliseconds(
      static_cast<std::chrono::milliseconds::rep>(std::llround(base_delay.count() * factor)));
}

RetryOutcome complete_with_retry(Backend& backend, const ChatRequest& request,
                                 const RetryPolicy& policy, const Sleeper& sleep) {
  policy.validate();
  for (int attempt = 1;; ++attempt) {
    try {
      return RetryOutcome{backend.complete(request), attempt};
    } catch (BackendError& e) {
      if (!e.retryable()) {
        e.set_attempts(attempt);
        throw;
      }
      if (attempt >= policy.max_attempts) throw ExhaustedRetries(e, attempt);
      const auto delay = policy.delay_after(attempt);
      if (sleep) {
        sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

ChatResponse CountingBackend::complete(const ChatRequest& request) {
  per_role_[static_cast<std::size_t>(request.tags.role)].fetch_add(1, std::memory_order_relaxed);
  return inner_.complete(request);
}

std::size_t CountingBackend::total() const noexcept {
  std::size_t n = 0;
  for (const auto& c : per_role_) n += c.load(std::memory_order_relaxed);
  return n;
}

std::size_t CountingBackend::calls(AgentRole role) const noexcept {
  return per_role_[static_cast<std::size_t>(role)].load(std::memory_order_relaxed);
}

}  // namespace visdebate
