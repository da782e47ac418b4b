// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "imagine/digest.hpp"
#include "imagine/error.hpp"
#include "imagine/policy.hpp"

#include <json.hpp>

#include "mock_server.hpp"

using namespace imagine;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

const Mode kModes[] = {Mode::Cursor, Mode::Verify, Mode::Object};
const RunMode kRunModes[] = {RunMode::Full, RunMode::CursorOnly, RunMode::CursorOnlyWithBoxes,
                             RunMode::SamplingTournament};

Mode mode_from(const std::string& s) {
  for (Mode m : kModes) {
    if (mode_name(m) == s) return m;
  }
  throw std::runtime_error("unknown mode " + s);
}

std::vector<Action> sample_actions(std::mt19937& rng) {
  std::vector<Action> out;
  for (Direction d : {Direction::Up, Direction::Down, Direction::Left, Direction::Right}) {
    out.push_back(Action::move_cursor(d));
    out.push_back(Action::move_object(d));
  }
  for (ActionKind k : {ActionKind::RequestFocus, ActionKind::AcceptFocus, ActionKind::RejectFocus,
                       ActionKind::Ignore, ActionKind::ReleaseObject, ActionKind::DrawBox}) {
    out.push_back(Action::of(k));
  }
  std::uniform_int_distribution<int> coord(0, 500);
  for (int i = 0; i < 10; ++i) {
    out.push_back(Action::rect({coord(rng), coord(rng)}, {coord(rng), coord(rng)}));
  }
  out.push_back(Action::answer("7"));
  out.push_back(Action::answer("a blue sphere, left of the MOVE"));
  return out;
}

Observation observation(const Image& prev, const Image& cur) {
  Observation obs;
  obs.t = 3;
  obs.mode = Mode::Cursor;
  obs.legal = legal_actions(Mode::Cursor);
  obs.previous = EncodedImage::from(prev);
  obs.current = EncodedImage::from(cur);
  obs.prompts = build_prompts("Count the stars.", obs.mode, obs.legal);
  obs.transcript = {{TranscriptEntry::Role::Assistant, "MOVE d"}, {TranscriptEntry::Role::User, "Cursor moved."}};
  return obs;
}

}  // namespace

TEST_CASE("legal action table") {
  using K = ActionKind;
  CHECK(legal_actions(Mode::Cursor) == ActionSet{K::MoveCursor, K::RequestFocus, K::Answer});
  CHECK(legal_actions(Mode::Cursor, RunMode::Full, true) ==
        ActionSet{K::MoveCursor, K::RequestFocus, K::Answer, K::FocusRect});
  CHECK(legal_actions(Mode::Verify) == ActionSet{K::AcceptFocus, K::RejectFocus});
  CHECK(legal_actions(Mode::Object) == ActionSet{K::MoveObject, K::Ignore, K::ReleaseObject, K::Answer});
  for (Mode m : kModes) {
    CHECK(legal_actions(m, RunMode::CursorOnly) == ActionSet{K::MoveCursor, K::Answer});
    CHECK(legal_actions(m, RunMode::CursorOnlyWithBoxes) == ActionSet{K::MoveCursor, K::DrawBox, K::Answer});
  }
  for (RunMode r : kRunModes) CHECK(run_mode_from_name(run_mode_name(r)) == r);
  CHECK_FALSE(run_mode_from_name("bogus"));
}

TEST_CASE("format_action round-trips and is masked by mode") {
  std::mt19937 rng(5);
  for (const Action& a : sample_actions(rng)) {
    for (Mode m : kModes) {
      for (RunMode r : kRunModes) {
        for (bool rect : {false, true}) {
          const ActionSet legal = legal_actions(m, r, rect);
          const ParseResult res = parse_action(format_action(a), legal);
          if (legal.contains(a.kind)) {
            REQUIRE(std::holds_alternative<Action>(res));
            CHECK(std::get<Action>(res) == a);
          } else if (auto* got = std::get_if<Action>(&res)) {
            // Only MOVE may be reinterpreted, and only as the other legal move.
            const bool move = a.kind == ActionKind::MoveCursor || a.kind == ActionKind::MoveObject;
            CHECK(move);
            CHECK(legal.contains(got->kind));
            CHECK(got->dir == a.dir);
          }
        }
      }
    }
  }
}

TEST_CASE("parsed actions are always legal") {
  const std::vector<std::string> replies = {"MOVE a FOCUS ACCEPT REJECT IGNORE RELEASE BOX ANSWER: x",
                                            "ACCEPT MOVE b", "RECT 1,2,3,4 MOVE c", "IGNORE", "d", "x: b",
                                            "BOX ANSWER: 4 RELEASE"};
  for (const auto& text : replies) {
    for (Mode m : kModes) {
      for (RunMode r : kRunModes) {
        const ActionSet legal = legal_actions(m, r, true);
        const ParseResult res = parse_action(text, legal);
        if (auto* a = std::get_if<Action>(&res)) {
          CHECK(legal.contains(a->kind));
        } else {
          CHECK_FALSE(std::get<ParseFailure>(res).message.empty());
        }
        // Deterministic.
        const ParseResult again = parse_action(text, legal);
        CHECK(res.index() == again.index());
      }
    }
  }
}

TEST_CASE("parse failures list the legal commands") {
  const auto res = parse_action("ACCEPT", legal_actions(Mode::Cursor));
  REQUIRE(std::holds_alternative<ParseFailure>(res));
  const std::string msg = std::get<ParseFailure>(res).message;
  CHECK(msg.find("ACCEPT is not available") != std::string::npos);
  CHECK(msg.find("MOVE a|b|c|d") != std::string::npos);
  CHECK(msg.find("FOCUS") != std::string::npos);
  CHECK(msg.find("ANSWER") != std::string::npos);
  CHECK(msg.find("REJECT") == std::string::npos);
}

TEST_CASE("annotated reply corpus") {
  std::ifstream in("fixtures/action_corpus.jsonl");
  REQUIRE(in.good());
  std::string line;
  int n = 0;
  int wrong = 0;
  while (std::getline(in, line)) {
    const json e = json::parse(line);
    ++n;
    const auto run = run_mode_from_name(e["run_mode"].get<std::string>());
    REQUIRE(run);
    const ActionSet legal = legal_actions(mode_from(e["mode"]), *run, e["allow_rect"].get<bool>());
    const ParseResult res = parse_action(e["text"].get<std::string>(), legal);
    const json& x = e["expect"];
    bool ok = false;
    if (x.value("failure", false)) {
      ok = std::holds_alternative<ParseFailure>(res);
    } else if (auto* a = std::get_if<Action>(&res)) {
      const auto kind = action_kind_from_name(x["kind"].get<std::string>());
      ok = kind == a->kind;
      if (x.contains("dir")) ok = ok && direction_token(a->dir) == x["dir"].get<std::string>()[0];
      if (x.contains("text")) ok = ok && a->text == x["text"].get<std::string>();
      if (x.contains("rect")) {
        const auto r = x["rect"].get<std::vector<int>>();
        ok = ok && a->top_left == PixelPoint{r[0], r[1]} && a->bottom_right == PixelPoint{r[2], r[3]};
      }
    }
    if (!ok) {
      ++wrong;
      MESSAGE("mismatch: " << line);
    }
  }
  CHECK(n == 200);
  CHECK(wrong == 0);
}

TEST_CASE("prompts embed the plan and list exactly the legal commands") {
  const std::string plan = "Find every red object.\nThen answer with the count.";
  const auto verify = build_prompts(plan, Mode::Verify, legal_actions(Mode::Verify));
  CHECK(verify.system_prompt.find(plan) != std::string::npos);
  CHECK(verify.step_reminder.find("ACCEPT") != std::string::npos);
  CHECK(verify.step_reminder.find("REJECT") != std::string::npos);
  CHECK(verify.step_reminder.find("MOVE") == std::string::npos);
  CHECK(verify.step_reminder.find("ANSWER") == std::string::npos);

  const auto cursor_only = build_prompts(plan, Mode::Cursor, legal_actions(Mode::Cursor, RunMode::CursorOnly));
  CHECK(cursor_only.step_reminder.find("FOCUS") == std::string::npos);
  CHECK(cursor_only.step_reminder.find("MOVE a|b|c|d") != std::string::npos);

  CHECK(build_prompts(plan, Mode::Object, legal_actions(Mode::Object)) ==
        build_prompts(plan, Mode::Object, legal_actions(Mode::Object)));
  CHECK_THROWS_AS(build_prompts("  ", Mode::Cursor, legal_actions(Mode::Cursor)), Error);
}

TEST_CASE("chat payload carries previous then current image") {
  const Image prev(8, 8, {255, 0, 0, 255});
  const Image cur(8, 8, {0, 0, 255, 255});
  Observation obs = observation(prev, cur);
  obs.correction = "No command found in your reply.";
  const ChatRequest req = build_chat_request(obs, {});
  CHECK(req.image_count() == 2);
  REQUIRE(req.messages.size() == 4);
  CHECK(req.messages[0].role == "system");
  CHECK(req.messages[1].role == "assistant");
  CHECK(req.messages[2].role == "user");

  const json j = json::parse(chat_request_json(req, false));
  CHECK(j["model"] == "gpt-4o");
  CHECK(j["temperature"] == 0.0);
  const json& content = j["messages"][3]["content"];
  std::vector<std::string> digests;
  for (const auto& p : content) {
    if (p["type"] == "image_ref") digests.push_back(p["digest"]);
  }
  REQUIRE(digests.size() == 2);
  CHECK(digests[0] == sha256_hex(encode_png(prev)));
  CHECK(digests[1] == sha256_hex(encode_png(cur)));
  const std::string last_text = content.back()["text"];
  CHECK(last_text.rfind("No command found", 0) == 0);
  CHECK(last_text.find(obs.prompts.step_reminder) != std::string::npos);

  // Inline form decodes back to the same PNG bytes, in the same order.
  const json inl = json::parse(chat_request_json(req, true));
  std::vector<Image> decoded;
  for (const auto& p : inl["messages"][3]["content"]) {
    if (p["type"] != "image_url") continue;
    const std::string url = p["image_url"]["url"];
    const std::string prefix = "data:image/png;base64,";
    REQUIRE(url.rfind(prefix, 0) == 0);
    decoded.push_back(decode_png(base64_decode(url.substr(prefix.size()))));
  }
  REQUIRE(decoded.size() == 2);
  CHECK(decoded[0] == prev);
  CHECK(decoded[1] == cur);

  // First step: only the current image.
  obs.previous.reset();
  CHECK(build_chat_request(obs, {}).image_count() == 1);
}

TEST_CASE("payload builder refuses more than two images") {
  Observation obs = observation(Image(4, 4), Image(4, 4, {9, 9, 9, 255}));
  ChatRequest req = build_chat_request(obs, {});
  CHECK(req.image_count() <= kMaxImagesPerRequest);
  obs.transcript.clear();
  for (int t = 0; t < 50; ++t) {
    obs.transcript.push_back({TranscriptEntry::Role::Assistant, "MOVE a"});
    obs.transcript.push_back({TranscriptEntry::Role::User, "ok"});
  }
  CHECK(build_chat_request(obs, {}).image_count() == 2);
}

TEST_CASE("transcript truncation keeps the newest steps") {
  std::vector<TranscriptEntry> t;
  for (int i = 0; i < 40; ++i) {
    t.push_back({TranscriptEntry::Role::Assistant, std::string(400, 'x') + std::to_string(i)});
    t.push_back({TranscriptEntry::Role::User, "ok " + std::to_string(i)});
  }
  const auto kept = truncate_transcript(t, 1000);
  REQUIRE(kept.size() >= 4);
  CHECK(kept.size() < t.size());
  CHECK(kept.front().role == TranscriptEntry::Role::Assistant);
  CHECK(kept.back() == t.back());
  CHECK(truncate_transcript(t, 1'000'000).size() == t.size());
  // Budget too small: the last two steps survive.
  CHECK(truncate_transcript(t, 1).size() == 4);
}

TEST_CASE("scripted policy") {
  ScriptedPolicy p({"MOVE a", "FOCUS"});
  Observation obs;
  ChatRequest req;
  CHECK(p.decide(obs, req) == "MOVE a");
  CHECK(p.decide(obs, req) == "FOCUS");
  CHECK(p.consumed() == 2);
  CHECK_THROWS_AS(p.decide(obs, req), Error);
}

TEST_CASE("redaction") {
  CHECK(redact("Bearer sk-123 and sk-123", "sk-123") == "Bearer [REDACTED] and [REDACTED]");
  CHECK(redact("nothing here", "") == "nothing here");
  CHECK(redact("aaaa", "aa") == "[REDACTED][REDACTED]");
}

TEST_CASE("remote policy against a mock chat endpoint") {
  MockServer mock;
  std::string seen_auth;
  json seen_body;
  int flaky_hits = 0;
  mock.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = json::parse(req.body);
    const json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "I go right.\nMOVE d"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  mock.server.Post("/parts", [&](const httplib::Request&, httplib::Response& res) {
    const json reply = {
        {"choices", {{{"message", {{"content", {{{"type", "text"}, {"text", "FO"}}, {{"type", "text"}, {"text", "CUS"}}}}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  mock.server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
    if (++flaky_hits < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"ANSWER: 4"}}]})", "application/json");
  });
  mock.server.Post("/garbage", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[]})", "application/json");
  });
  mock.server.Post("/unauthorized", [&](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  mock.start();

  auto endpoint = [&](const std::string& path) {
    ChatEndpoint e;
    e.url = mock.url(path);
    e.timeout = 2000ms;
    e.backoff = 1ms;
    return e;
  };

  const Observation obs = observation(Image(6, 6), Image(6, 6, {0, 255, 0, 255}));
  const ChatRequest req = build_chat_request(obs, {});

  RemotePolicy policy(endpoint("/v1/chat/completions"), "test-token");
  const std::string reply = policy.decide(obs, req);
  CHECK(reply == "I go right.\nMOVE d");
  CHECK(seen_auth == "Bearer test-token");
  CHECK(seen_body == json::parse(chat_request_json(req, true)));
  const auto parsed = parse_action(reply, obs.legal);
  REQUIRE(std::holds_alternative<Action>(parsed));
  CHECK(std::get<Action>(parsed) == Action::move_cursor(Direction::Right));

  CHECK(RemotePolicy(endpoint("/parts"), "").decide(obs, req) == "FOCUS");
  CHECK(RemotePolicy(endpoint("/flaky"), "").decide(obs, req) == "ANSWER: 4");
  CHECK(flaky_hits == 3);

  try {
    RemotePolicy(endpoint("/garbage"), "").decide(obs, req);
    FAIL("expected ProviderRejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProviderRejected);
  }
  try {
    RemotePolicy(endpoint("/unauthorized"), "secret-value").decide(obs, req);
    FAIL("expected ProviderRejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProviderRejected);
    CHECK(std::string(e.what()).find("secret-value") == std::string::npos);
  }
}
