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

#include <cstdlib>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "visdebate/backend.hpp"
#include "visdebate/mock_backend.hpp"
#include "visdebate/openai_backend.hpp"

namespace visdebate {
namespace {

using nlohmann::json;
using std::chrono::milliseconds;

CallTags tags(AgentRole role, int round, std::string item, int trial,
              Phase phase = Phase::Reasoning) {
  return CallTags{role, phase, round, std::move(item), trial};
}

ChatRequest request_for(const CallTags& t) {
  ChatRequest r;
  r.system_prompt = "system";
  r.user_parts = {TextPart{"user"}, ImagePart{FixtureImage{"k"}}};
  r.tags = t;
  return r;
}

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

TEST(MockBackend, ExactKeyLookup) {
  MockScript s;
  s.add({AgentRole::ReasonerA, std::nullopt, 1, "q1", 0, "FINAL ANSWER: B"});
  MockBackend m(s);
  EXPECT_EQ(m.complete(request_for(tags(AgentRole::ReasonerA, 1, "q1", 0))).text,
            "FINAL ANSWER: B");
}

TEST(MockBackend, DefaultFallback) {
  MockScript s;
  s.set_default("FINAL ANSWER: A");
  MockBackend m(s);
  EXPECT_EQ(
      m.complete(request_for(tags(AgentRole::Decider, 0, "q9", 2, Phase::Decision))).text,
      "FINAL ANSWER: A");
}

TEST(MockBackend, MissWithoutDefault) {
  MockScript s;
  s.add({AgentRole::ReasonerA, std::nullopt, 1, "q1", 0, "x"});
  MockBackend m(s);
  try {
    m.complete(request_for(tags(AgentRole::ReasonerB, 1, "q1", 0)));
    FAIL() << "expected ScriptMiss";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::ScriptMiss);
    EXPECT_FALSE(e.retryable());
  }
}

TEST(MockScript, MostSpecificRuleWins) {
  MockScript s;
  s.set_default("default");
  s.add({AgentRole::ReasonerA, std::nullopt, std::nullopt, "q", std::nullopt, "any"});
  s.add({AgentRole::ReasonerA, std::nullopt, std::nullopt, "q", 1, "trial1"});
  s.add({AgentRole::ReasonerA, std::nullopt, 2, "q", std::nullopt, "round2"});
  s.add({AgentRole::ReasonerA, std::nullopt, 2, "q", 1, "round2trial1"});
  s.add({AgentRole::ReasonerA, Phase::Reasoning, std::nullopt, "q", std::nullopt, "phased"});

  auto get = [&](int round, int trial) {
    return s.lookup(tags(AgentRole::ReasonerA, round, "q", trial)).value();
  };
  EXPECT_EQ(get(2, 1), "round2trial1");
  EXPECT_EQ(get(2, 0), "round2");
  EXPECT_EQ(get(3, 1), "trial1");
  EXPECT_EQ(get(3, 0), "phased");  // phase-exact beats phase-any at the same level
  EXPECT_EQ(s.lookup(tags(AgentRole::ReasonerA, 3, "other", 0)).value(), "default");
  EXPECT_EQ(s.lookup(tags(AgentRole::ReasonerA, 3, "q", 0, Phase::Decision)).value(), "any");
}

TEST(MockScript, PhaseSeparatesDescriberCalls) {
  MockScript s;
  s.add({AgentRole::Describer, Phase::Global, 0, "q", std::nullopt, "global"});
  s.add({AgentRole::Describer, Phase::Detailed, 0, "q", std::nullopt, "detailed"});
  EXPECT_EQ(s.lookup(tags(AgentRole::Describer, 0, "q", 0, Phase::Global)).value(), "global");
  EXPECT_EQ(s.lookup(tags(AgentRole::Describer, 0, "q", 0, Phase::Detailed)).value(), "detailed");
}

TEST(MockScript, DuplicateKeysRejected) {
  MockScript s;
  s.add({AgentRole::ReasonerA, std::nullopt, 1, "q", 0, "x"});
  EXPECT_THROW(s.add({AgentRole::ReasonerA, std::nullopt, 1, "q", 0, "y"}), Error);
}

TEST(MockScript, ParseWriteRoundTrip) {
  std::istringstream in(
      R"({"role":"describer","phase":"global","round":0,"item_id":"q1","trial":"*","response":"g"}
{"role":"reasoner_a","round":1,"item_id":"q1","trial":2,"response":"FINAL ANSWER: C"}
{"role":"reasoner_b","item_id":"q1","response":"b-any"}
{"role":"*","round":"*","item_id":"*","trial":"*","response":"fallback"}
)");
  const MockScript s = MockScript::parse(in);
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.default_response(), "fallback");
  std::stringstream out;
  s.write(out);
  const MockScript again = MockScript::parse(out);
  for (const CallTags& t : {tags(AgentRole::Describer, 0, "q1", 1, Phase::Global),
                            tags(AgentRole::ReasonerA, 1, "q1", 2),
                            tags(AgentRole::ReasonerB, 7, "q1", 0),
                            tags(AgentRole::Decider, 0, "zz", 0, Phase::Decision)}) {
    EXPECT_EQ(s.lookup(t), again.lookup(t));
  }
  EXPECT_EQ(s.lookup(tags(AgentRole::ReasonerA, 1, "q1", 2)).value(), "FINAL ANSWER: C");
}

TEST(MockScript, ParseErrorsNameTheLine) {
  std::istringstream bad_role(R"({"role":"judge","item_id":"q","response":"x"})");
  EXPECT_THROW(MockScript::parse(bad_role), Error);
  std::istringstream bad_round(
      "\n" R"({"role":"decider","round":"x","item_id":"q","response":"x"})");
  try {
    MockScript::parse(bad_round);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos) << e.what();
  }
}

TEST(MockBackend, DeterministicUnderConcurrency) {
  MockScript s;
  std::mt19937 rng(5);
  for (int item = 0; item < 10; ++item) {
    for (int round = 1; round <= 3; ++round) {
      s.add({AgentRole::ReasonerA, std::nullopt, round, "q" + std::to_string(item), std::nullopt,
             "resp-" + std::to_string(rng())});
    }
  }
  s.set_default("default");
  MockBackend m(s);

  std::vector<CallTags> calls;
  for (int n = 0; n < 2000; ++n) {
    calls.push_back(tags(rng() % 2 ? AgentRole::ReasonerA : AgentRole::ReasonerB,
                         1 + static_cast<int>(rng() % 4), "q" + std::to_string(rng() % 12),
                         static_cast<int>(rng() % 3)));
  }
  std::vector<std::string> sequential;
  for (const auto& t : calls) sequential.push_back(m.complete(request_for(t)).text);

  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < 8; ++w) {
      pool.emplace_back([&, w] {
        // Each worker walks the calls in a different order.
        for (std::size_t k = 0; k < calls.size(); ++k) {
          const std::size_t i = (k * 7919 + static_cast<std::size_t>(w) * 131) % calls.size();
          EXPECT_EQ(m.complete(request_for(calls[i])).text, sequential[i]);
        }
      });
    }
  }
  EXPECT_EQ(m.calls(), calls.size() * 9);
}

// ---------------------------------------------------------------------------
// Retry
// ---------------------------------------------------------------------------

/// Fails with `kind` for the first `failures` calls, then answers "ok".
class FlakyBackend : public Backend {
 public:
  FlakyBackend(BackendErrorKind kind, int failures) : kind_(kind), failures_(failures) {}
  ChatResponse complete(const ChatRequest&) override {
    ++calls;
    if (calls <= failures_) throw BackendError(kind_, "injected failure");
    return ChatResponse{"ok", std::nullopt, milliseconds(0)};
  }
  std::string id() const override { return "flaky"; }
  int calls = 0;

 private:
  BackendErrorKind kind_;
  int failures_;
};

RetryPolicy policy(int attempts, int base_ms = 100, double mult = 2.0) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.base_delay = milliseconds(base_ms);
  p.backoff_multiplier = mult;
  return p;
}

TEST(Retry, RateLimitedTwiceThenSuccess) {
  FlakyBackend b(BackendErrorKind::RateLimited, 2);
  std::vector<milliseconds> slept;
  const RetryOutcome out = complete_with_retry(b, request_for(tags(AgentRole::ReasonerA, 1, "q", 0)),
                                               policy(3), [&](milliseconds d) { slept.push_back(d); });
  EXPECT_EQ(out.response.text, "ok");
  EXPECT_EQ(out.attempts, 3);
  EXPECT_EQ(b.calls, 3);
  EXPECT_EQ(slept, (std::vector<milliseconds>{milliseconds(100), milliseconds(200)}));
}

TEST(Retry, RemoteRejectionIsImmediate) {
  FlakyBackend b(BackendErrorKind::RemoteRejection, 5);
  std::vector<milliseconds> slept;
  try {
    complete_with_retry(b, request_for(tags(AgentRole::ReasonerA, 1, "q", 0)), policy(3),
                        [&](milliseconds d) { slept.push_back(d); });
    FAIL();
  } catch (const ExhaustedRetries&) {
    FAIL() << "non-retryable error must not be wrapped";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::RemoteRejection);
    EXPECT_EQ(e.attempts(), 1);
  }
  EXPECT_EQ(b.calls, 1);
  EXPECT_TRUE(slept.empty());
}

TEST(Retry, PersistentTransportExhaustsAfterMaxAttempts) {
  FlakyBackend b(BackendErrorKind::Transport, 100);
  try {
    complete_with_retry(b, request_for(tags(AgentRole::ReasonerA, 1, "q", 0)), policy(2),
                        [](milliseconds) {});
    FAIL();
  } catch (const ExhaustedRetries& e) {
    EXPECT_EQ(e.last_kind(), BackendErrorKind::Transport);
    EXPECT_EQ(e.attempts(), 2);
    EXPECT_EQ(e.kind(), BackendErrorKind::ExhaustedRetries);
  }
  EXPECT_EQ(b.calls, 2);
}

TEST(Retry, DelayScheduleIsGeometric) {
  const RetryPolicy p = policy(6, 250, 3.0);
  EXPECT_EQ(p.delay_after(1), milliseconds(250));
  EXPECT_EQ(p.delay_after(2), milliseconds(750));
  EXPECT_EQ(p.delay_after(3), milliseconds(2250));
  EXPECT_THROW(policy(0).validate(), Error);
  EXPECT_THROW(policy(3, 100, 0.5).validate(), Error);
}

TEST(Retry, AttemptsNeverExceedMaximum) {
  const BackendErrorKind kinds[] = {
      BackendErrorKind::Transport,        BackendErrorKind::RemoteRejection,
      BackendErrorKind::RateLimited,      BackendErrorKind::ServerError,
      BackendErrorKind::ScriptMiss,       BackendErrorKind::InvalidRequest,
      BackendErrorKind::MalformedResponse};
  for (BackendErrorKind kind : kinds) {
    for (int max_attempts = 1; max_attempts <= 6; ++max_attempts) {
      for (int failures = 0; failures <= 8; ++failures) {
        FlakyBackend b(kind, failures);
        int sleeps = 0;
        int attempts = 0;
        try {
          attempts = complete_with_retry(b, request_for(tags(AgentRole::Decider, 0, "q", 0)),
                                         policy(max_attempts), [&](milliseconds) { ++sleeps; })
                         .attempts;
        } catch (const BackendError& e) {
          attempts = e.attempts();
        }
        EXPECT_LE(b.calls, max_attempts);
        EXPECT_EQ(attempts, b.calls);
        EXPECT_EQ(sleeps, b.calls - 1);
      }
    }
  }
}

TEST(CountingBackend, CountsPerRole) {
  MockScript s;
  s.set_default("x");
  MockBackend m(s);
  CountingBackend c(m);
  c.complete(request_for(tags(AgentRole::ReasonerA, 1, "q", 0)));
  c.complete(request_for(tags(AgentRole::ReasonerA, 2, "q", 0)));
  c.complete(request_for(tags(AgentRole::Decider, 0, "q", 0, Phase::Decision)));
  EXPECT_EQ(c.total(), 3u);
  EXPECT_EQ(c.calls(AgentRole::ReasonerA), 2u);
  EXPECT_EQ(c.calls(AgentRole::Decider), 1u);
  EXPECT_EQ(c.calls(AgentRole::Describer), 0u);
}

TEST(ChatRequest, Validation) {
  ChatRequest r = request_for(tags(AgentRole::ReasonerA, 1, "q", 0));
  EXPECT_NO_THROW(r.validate());
  r.user_parts.push_back(ImagePart{FixtureImage{"second"}});
  EXPECT_THROW(r.validate(), BackendError);
  r = request_for(tags(AgentRole::ReasonerA, 1, "q", 0));
  r.sampling.temperature = -1;
  EXPECT_THROW(r.validate(), BackendError);
}

// ---------------------------------------------------------------------------
// OpenAI-compatible adapter
// ---------------------------------------------------------------------------

TEST(Base64, Rfc4648Vectors) {
  EXPECT_EQ(encode_base64(""), "");
  EXPECT_EQ(encode_base64("f"), "Zg==");
  EXPECT_EQ(encode_base64("fo"), "Zm8=");
  EXPECT_EQ(encode_base64("foo"), "Zm9v");
  EXPECT_EQ(encode_base64("foob"), "Zm9vYg==");
  EXPECT_EQ(encode_base64("fooba"), "Zm9vYmE=");
  EXPECT_EQ(encode_base64("foobar"), "Zm9vYmFy");
}

TEST(OpenAIBackend, ImageDataUrls) {
  const std::string url = image_data_url(ImageFile{testing::data_path("images/pixel.png")});
  EXPECT_EQ(url.rfind("data:image/png;base64,iVBORw0KGgo", 0), 0u) << url;
  EXPECT_EQ(image_data_url(InlineImage{"image/jpeg", "/9j/AA=="}), "data:image/jpeg;base64,/9j/AA==");
  try {
    image_data_url(FixtureImage{"k"});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::InvalidRequest);
  }
}

TEST(OpenAIBackend, BodyCopiesTextPartsByteForByte) {
  OpenAIBackend b({"http://127.0.0.1:1/v1", "test-model", "VISDEBATE_TEST_UNSET_KEY"});
  ChatRequest r;
  r.system_prompt = "sys \"quoted\"\n\ttab {braces} \xc3\xa9";
  const std::string text = "Line 1\r\nünïcödé {x} \\ backslash \x01 ctrl\n\nFINAL ANSWER: X";
  r.user_parts = {TextPart{text}, ImagePart{InlineImage{"image/png", "AAAA"}}};
  r.sampling = {0.7, 55};
  const json body = b.build_body(r);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["temperature"], 0.7);
  EXPECT_EQ(body["max_tokens"], 55);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"].get<std::string>(), r.system_prompt);
  const json& parts = body["messages"][1]["content"];
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0]["type"], "text");
  // Through the serialized wire form and back.
  const json wire = json::parse(body.dump());
  EXPECT_EQ(wire["messages"][1]["content"][0]["text"].get<std::string>(), text);
  EXPECT_EQ(parts[1]["type"], "image_url");
  EXPECT_EQ(parts[1]["image_url"]["url"], "data:image/png;base64,AAAA");
}

TEST(OpenAIBackend, StatusMapping) {
  const std::string ok = R"({"choices":[{"message":{"role":"assistant","content":"FINAL ANSWER: B"}}],
                             "usage":{"prompt_tokens":10,"completion_tokens":3}})";
  const ChatResponse r = OpenAIBackend::parse_response(200, ok);
  EXPECT_EQ(r.text, "FINAL ANSWER: B");
  ASSERT_TRUE(r.usage);
  EXPECT_EQ(r.usage->completion_tokens, 3);

  const std::string parts =
      R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})";
  EXPECT_EQ(OpenAIBackend::parse_response(200, parts).text, "ab");

  auto kind_of = [](int status, const std::string& body) {
    try {
      OpenAIBackend::parse_response(status, body);
    } catch (const BackendError& e) {
      return e.kind();
    }
    return BackendErrorKind::ExhaustedRetries;  // sentinel: did not throw
  };
  EXPECT_EQ(kind_of(429, "{}"), BackendErrorKind::RateLimited);
  EXPECT_EQ(kind_of(500, "oops"), BackendErrorKind::ServerError);
  EXPECT_EQ(kind_of(503, ""), BackendErrorKind::ServerError);
  EXPECT_EQ(kind_of(400, R"({"error":"bad"})"), BackendErrorKind::RemoteRejection);
  EXPECT_EQ(kind_of(401, ""), BackendErrorKind::RemoteRejection);
  EXPECT_EQ(kind_of(200, "not json"), BackendErrorKind::MalformedResponse);
  EXPECT_EQ(kind_of(200, R"({"choices":[]})"), BackendErrorKind::MalformedResponse);
  EXPECT_EQ(kind_of(200, R"({"choices":[{"message":{"content":""}}]})"),
            BackendErrorKind::MalformedResponse);
}

/// Local chat-completions stand-in that records what it receives.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard<std::mutex> lock(mutex_);
      bodies.push_back(req.body);
      auth.push_back(req.get_header_value("Authorization"));
      if (!statuses.empty()) {
        res.status = statuses.front();
        statuses.erase(statuses.begin());
        if (res.status != 200) {
          res.set_content(R"({"error":{"message":"nope"}})", "application/json");
          return;
        }
      }
      res.set_content(
          json{{"choices", {{{"message", {{"role", "assistant"}, {"content", reply}}}}}}}.dump(),
          "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::vector<std::string> bodies;
  std::vector<std::string> auth;
  std::vector<int> statuses;
  std::string reply = "It is a cat.\nFINAL ANSWER: A";

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mutex_;
};

TEST(OpenAIBackend, RoundTripAgainstLocalServer) {
  FakeServer server;
  ::setenv("VISDEBATE_TEST_KEY", "sk-test-123", 1);
  OpenAIBackend b({server.endpoint(), "vlm", "VISDEBATE_TEST_KEY", std::chrono::seconds(5)});
  EXPECT_EQ(b.id(), "openai:vlm@" + server.endpoint());

  ChatRequest r;
  r.system_prompt = "You describe images.";
  const std::string text = "Question:\nWhat is it?\n(A) a cat\n(B) a dog\n\n\"quotes\" & <tags> é";
  r.user_parts = {TextPart{text}, ImagePart{ImageFile{testing::data_path("images/pixel.png")}}};
  const ChatResponse resp = b.complete(r);
  EXPECT_EQ(resp.text, server.reply);

  ASSERT_EQ(server.bodies.size(), 1u);
  EXPECT_EQ(server.auth[0], "Bearer sk-test-123");
  const json sent = json::parse(server.bodies[0]);
  EXPECT_EQ(sent["messages"][1]["content"][0]["text"].get<std::string>(), text);
  EXPECT_EQ(sent["messages"][0]["content"].get<std::string>(), r.system_prompt);
  EXPECT_EQ(sent["messages"][1]["content"][1]["image_url"]["url"].get<std::string>(),
            image_data_url(ImageFile{testing::data_path("images/pixel.png")}));
  ::unsetenv("VISDEBATE_TEST_KEY");
}

TEST(OpenAIBackend, NoKeyMeansNoAuthorizationHeader) {
  FakeServer server;
  ::unsetenv("VISDEBATE_TEST_ABSENT_KEY");
  OpenAIBackend b({server.endpoint(), "vlm", "VISDEBATE_TEST_ABSENT_KEY", std::chrono::seconds(5)});
  ChatRequest r;
  r.user_parts = {TextPart{"hi"}};
  b.complete(r);
  ASSERT_EQ(server.auth.size(), 1u);
  EXPECT_EQ(server.auth[0], "");
}

TEST(OpenAIBackend, RetriesRateLimitOverHttp) {
  FakeServer server;
  server.statuses = {429, 503};
  OpenAIBackend b({server.endpoint(), "vlm", "VISDEBATE_TEST_ABSENT_KEY", std::chrono::seconds(5)});
  ChatRequest r;
  r.user_parts = {TextPart{"hi"}};
  const RetryOutcome out = complete_with_retry(b, r, policy(3, 0), [](milliseconds) {});
  EXPECT_EQ(out.attempts, 3);
  EXPECT_EQ(out.response.text, server.reply);
}

TEST(OpenAIBackend, RejectionCarriesStatus) {
  FakeServer server;
  server.statuses = {400};
  OpenAIBackend b({server.endpoint(), "vlm", "VISDEBATE_TEST_ABSENT_KEY", std::chrono::seconds(5)});
  ChatRequest r;
  r.user_parts = {TextPart{"hi"}};
  try {
    b.complete(r);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::RemoteRejection);
    EXPECT_EQ(e.http_status(), 400);
  }
}

TEST(OpenAIBackend, UnreachableHostIsTransport) {
  // Bind and release a port so nothing listens on it.
  int port = 0;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  OpenAIBackend b({"http://127.0.0.1:" + std::to_string(port) + "/v1", "vlm",
                   "VISDEBATE_TEST_ABSENT_KEY", std::chrono::seconds(2)});
  ChatRequest r;
  r.user_parts = {TextPart{"hi"}};
  try {
    b.complete(r);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Transport);
    EXPECT_TRUE(e.retryable());
  }
}

}  // namespace
}  // namespace visdebate
