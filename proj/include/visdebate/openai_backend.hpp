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

#include <chrono>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "visdebate/backend.hpp"

namespace visdebate {

struct OpenAIConfig {
  /// Base URL such as "https://api.openai.com/v1"; "/chat/completions" is
  /// appended unless already present.
  std::string endpoint;
  std::string model;
  /// Name of the environment variable holding the bearer token. An unset or
  /// empty variable sends no Authorization header.
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{120};
};

/// Chat-completions client sending the image as an `image_url` data URL.
class OpenAIBackend : public Backend {
 public:
  explicit OpenAIBackend(OpenAIConfig config);

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override;

  /// Request body for `request`; text parts are copied byte for byte.
  nlohmann::json build_body(const ChatRequest& request) const;

  /// Maps an HTTP status and body to a response or a classified BackendError.
  static ChatResponse parse_response(int status, std::string_view body);

 private:
  OpenAIConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
};

std::string encode_base64(std::string_view bytes);

/// "data:<media type>;base64,<payload>". File images are read and their type
/// sniffed (PNG/JPEG); fixture keys are rejected with InvalidRequest.
std::string image_data_url(const ImageSource& image);

}  // namespace visdebate
