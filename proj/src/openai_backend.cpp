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

#include "visdebate/openai_backend.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <httplib.h>

namespace visdebate {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw BackendError(BackendErrorKind::InvalidRequest,
                       fmt::format("cannot read image {}", path.string()));
  }
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string sniff_media_type(std::string_view bytes, const std::filesystem::path& path) {
  if (bytes.size() >= 8 && bytes.substr(0, 8) == std::string_view("\x89PNG\r\n\x1a\n", 8)) {
    return "image/png";
  }
  if (bytes.size() >= 3 && bytes.substr(0, 3) == std::string_view("\xff\xd8\xff", 3)) {
    return "image/jpeg";
  }
  throw BackendError(BackendErrorKind::InvalidRequest,
                     fmt::format("{} is neither PNG nor JPEG", path.string()));
}

std::string message_text(const json& content) {
  if (content.is_string()) return content.get<std::string>();
  std::string out;
  if (content.is_array()) {
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text" && part.contains("text") &&
          part["text"].is_string()) {
        out += part["text"].get<std::string>();
      }
    }
  }
  return out;
}

}  // namespace

std::string encode_base64(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) |
                   (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (const auto rest = bytes.size() - i; rest > 0) {
    auto n = static_cast<unsigned>(static_cast<unsigned char>(bytes[i])) << 16;
    if (rest == 2) n |= static_cast<unsigned>(static_cast<unsigned char>(bytes[i + 1])) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string image_data_url(const ImageSource& image) {
  if (const auto* f = std::get_if<ImageFile>(&image)) {
    const std::string bytes = read_file(f->path);
    if (bytes.empty()) {
      throw BackendError(BackendErrorKind::InvalidRequest,
                         fmt::format("image {} is empty", f->path.string()));
    }
    return "data:" + sniff_media_type(bytes, f->path) + ";base64," + encode_base64(bytes);
  }
  if (const auto* i = std::get_if<InlineImage>(&image)) {
    return "data:" + i->media_type + ";base64," + i->base64_payload;
  }
  throw BackendError(BackendErrorKind::InvalidRequest,
                     "fixture image keys are only understood by the mock backend");
}

OpenAIBackend::OpenAIBackend(OpenAIConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error("openai backend: endpoint is required");
  if (config_.model.empty()) throw Error("openai backend: model is required");

  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(fmt::format("openai backend: endpoint \"{}\" has no scheme", config_.endpoint));
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? std::string() : config_.endpoint.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  constexpr std::string_view kSuffix = "/chat/completions";
  if (path_.size() < kSuffix.size() || path_.compare(path_.size() - kSuffix.size(),
                                                     kSuffix.size(), kSuffix) != 0) {
    path_ += kSuffix;
  }

  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
}

std::string OpenAIBackend::id() const {
  return fmt::format("openai:{}@{}", config_.model, config_.endpoint);
}

json OpenAIBackend::build_body(const ChatRequest& request) const {
  json content = json::array();
  for (const auto& part : request.user_parts) {
    if (const auto* t = std::get_if<TextPart>(&part)) {
      content.push_back({{"type", "text"}, {"text", t->text}});
    } else {
      const auto& img = std::get<ImagePart>(part);
      content.push_back(
          {{"type", "image_url"}, {"image_url", {{"url", image_data_url(img.image)}}}});
    }
  }
  json messages = json::array();
  if (!request.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", std::move(content)}});
  return json{{"model", config_.model},
              {"messages", std::move(messages)},
              {"temperature", request.sampling.temperature},
              {"max_tokens", request.sampling.max_output_tokens}};
}

ChatResponse OpenAIBackend::parse_response(int status, std::string_view body) {
  if (status == 429) {
    throw BackendError(BackendErrorKind::RateLimited, std::string(body), status);
  }
  if (status >= 500) {
    throw BackendError(BackendErrorKind::ServerError, std::string(body), status);
  }
  if (status < 200 || status >= 300) {
    throw BackendError(BackendErrorKind::RemoteRejection, std::string(body), status);
  }
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(BackendErrorKind::MalformedResponse, e.what(), status);
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty() ||
      !doc["choices"][0].contains("message")) {
    throw BackendError(BackendErrorKind::MalformedResponse, "response has no choices", status);
  }
  const json& message = doc["choices"][0]["message"];
  ChatResponse out;
  out.text = message_text(message.value("content", json()));
  if (out.text.empty()) {
    throw BackendError(BackendErrorKind::MalformedResponse, "empty message content", status);
  }
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const json& u = doc["usage"];
    out.usage = Usage{u.value("prompt_tokens", 0), u.value("completion_tokens", 0)};
  }
  return out;
}

ChatResponse OpenAIBackend::complete(const ChatRequest& request) {
  request.validate();
  std::string body;
  try {
    body = build_body(request).dump();
  } catch (const json::type_error& e) {
    // Non-UTF-8 prompt text; refuse rather than alter it.
    throw BackendError(BackendErrorKind::InvalidRequest, e.what());
  }

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto start = std::chrono::steady_clock::now();
  auto result = client.Post(path_, headers, body, "application/json");
  if (!result) {
    throw BackendError(BackendErrorKind::Transport,
                       fmt::format("{}{}: {}", scheme_host_port_, path_,
                                   httplib::to_string(result.error())));
  }
  ChatResponse out = parse_response(result->status, result->body);
  out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  return out;
}

}  // namespace visdebate
