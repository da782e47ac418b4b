// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "imagine/direction.hpp"
#include "imagine/image.hpp"
#include "imagine/png_io.hpp"

namespace imagine {

struct Scene2D;

enum class ActionKind {
  MoveCursor,
  RequestFocus,
  AcceptFocus,
  RejectFocus,
  Ignore,
  MoveObject,
  ReleaseObject,
  FocusRect,
  DrawBox,
  Answer,
};

std::string_view action_kind_name(ActionKind k);
std::optional<ActionKind> action_kind_from_name(std::string_view name);

struct Action {
  ActionKind kind = ActionKind::Answer;
  Direction dir = Direction::Up;  // MoveCursor, MoveObject
  PixelPoint top_left;            // FocusRect, half-open
  PixelPoint bottom_right;
  std::string text;  // Answer

  static Action move_cursor(Direction d) { return {ActionKind::MoveCursor, d, {}, {}, {}}; }
  static Action move_object(Direction d) { return {ActionKind::MoveObject, d, {}, {}, {}}; }
  static Action of(ActionKind k) { return {k, Direction::Up, {}, {}, {}}; }
  static Action rect(PixelPoint tl, PixelPoint br) { return {ActionKind::FocusRect, Direction::Up, tl, br, {}}; }
  static Action answer(std::string text) { return {ActionKind::Answer, Direction::Up, {}, {}, std::move(text)}; }

  bool mutates_scene() const { return kind != ActionKind::Answer; }

  friend bool operator==(const Action&, const Action&) = default;
};

/// Canonical command text; parse_action maps it back to the same action.
std::string format_action(const Action& a);

class ActionSet {
 public:
  ActionSet() = default;
  ActionSet(std::initializer_list<ActionKind> kinds) {
    for (auto k : kinds) insert(k);
  }
  void insert(ActionKind k) { bits_ |= bit(k); }
  void erase(ActionKind k) { bits_ &= ~bit(k); }
  bool contains(ActionKind k) const { return (bits_ & bit(k)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::vector<ActionKind> kinds() const;

  friend bool operator==(const ActionSet&, const ActionSet&) = default;

 private:
  static std::uint32_t bit(ActionKind k) { return 1u << static_cast<unsigned>(k); }
  std::uint32_t bits_ = 0;
};

/// What the focus state lets the policy do.
enum class Mode { Cursor, Verify, Object };
std::string_view mode_name(Mode m);

/// Baseline restrictions of the operator set.
enum class RunMode { Full, CursorOnly, CursorOnlyWithBoxes, SamplingTournament };
std::string_view run_mode_name(RunMode m);
std::optional<RunMode> run_mode_from_name(std::string_view name);

ActionSet legal_actions(Mode mode, RunMode run_mode = RunMode::Full, bool allow_rect = false);

struct ParseFailure {
  std::string message;  // corrective text for the re-prompt
};

using ParseResult = std::variant<Action, ParseFailure>;

/// The last well-formed command of a legal kind wins. MOVE resolves to
/// MoveCursor or MoveObject, whichever is legal. Without any command, a bare
/// direction letter is accepted when it is the whole reply, follows a colon
/// or ends the text.
ParseResult parse_action(std::string_view raw, const ActionSet& legal);

struct PromptBundle {
  std::string system_prompt;
  std::string step_reminder;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// Throws Error(InvalidArgument) for an empty plan.
PromptBundle build_prompts(std::string_view task_plan, Mode mode, const ActionSet& legal);

struct TranscriptEntry {
  enum class Role { Assistant, User };
  Role role = Role::Assistant;
  std::string text;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

/// A PNG kept by reference so observations and payloads share bytes.
struct EncodedImage {
  std::shared_ptr<const Bytes> png;
  std::string digest;  // SHA-256 hex of png

  static EncodedImage from(const Image& img);
  bool empty() const { return !png; }
};

struct Observation {
  int t = 0;
  Mode mode = Mode::Cursor;
  ActionSet legal;
  EncodedImage current;
  std::optional<EncodedImage> previous;
  std::vector<TranscriptEntry> transcript;
  PromptBundle prompts;
  std::optional<std::string> correction;  // set after a parse failure
  /// Privileged view for oracle policies; never serialized or sent.
  const Scene2D* scene = nullptr;
  /// Privileged: the two candidates of a tournament match.
  std::vector<const Scene2D*> compared;
};

struct ChatPart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;
  EncodedImage image;
};

struct ChatMessage {
  std::string role;  // system, user, assistant
  std::vector<ChatPart> parts;
};

struct ChatOptions {
  std::string model = "gpt-4o";
  double temperature = 0.0;
  std::size_t token_budget = 16000;  // transcript budget, estimated at 4 characters per token
};

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  std::vector<ChatMessage> messages;

  std::size_t image_count() const;
};

inline constexpr std::size_t kMaxImagesPerRequest = 2;

/// Drops the oldest assistant/user pairs until the estimate fits, always
/// keeping the two most recent steps.
std::vector<TranscriptEntry> truncate_transcript(const std::vector<TranscriptEntry>& transcript,
                                                 std::size_t token_budget);

/// System prompt, transcript, then one user message with the previous and
/// current renders followed by the reminder. Throws Error(InvalidArgument)
/// if the result would carry more than two images.
ChatRequest build_chat_request(const Observation& obs, const ChatOptions& opts);

/// Chat-completions JSON. With inline_images the PNGs are embedded as base64
/// data URLs; otherwise they are referenced by digest (the form kept in traces).
std::string chat_request_json(const ChatRequest& req, bool inline_images = true);

class Policy {
 public:
  virtual ~Policy() = default;
  /// Returns the raw reply text for the observation.
  virtual std::string decide(const Observation& obs, const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Replays fixed replies in order; running past the end throws
/// Error(BudgetExhausted).
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<std::string> lines) : lines_(std::move(lines)) {}
  std::string decide(const Observation& obs, const ChatRequest& request) override;
  std::string name() const override { return "scripted"; }
  std::size_t consumed() const { return next_; }

 private:
  std::vector<std::string> lines_;
  std::size_t next_ = 0;
};

/// Deterministic policy computing its reply from the observation.
class FunctionPolicy final : public Policy {
 public:
  using Fn = std::function<std::string(const Observation&)>;
  FunctionPolicy(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string decide(const Observation& obs, const ChatRequest&) override { return fn_(obs); }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Fn fn_;
};

struct ChatEndpoint {
  std::string url;  // full chat-completions URL
  std::chrono::milliseconds timeout{120'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
};

/// Client for a chat-completions style endpoint.
class RemotePolicy final : public Policy {
 public:
  RemotePolicy(ChatEndpoint endpoint, std::string auth_token);
  std::string decide(const Observation& obs, const ChatRequest& request) override;
  std::string name() const override { return "remote"; }

 private:
  ChatEndpoint endpoint_;
  std::string auth_token_;
};

/// Replaces every occurrence of `secret` with a fixed marker.
std::string redact(std::string text, std::string_view secret);

}  // namespace imagine
