// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/policy.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "imagine/digest.hpp"
#include "imagine/error.hpp"

namespace imagine {

namespace {

constexpr std::pair<ActionKind, std::string_view> kKindNames[] = {
    {ActionKind::MoveCursor, "MoveCursor"},     {ActionKind::RequestFocus, "RequestFocus"},
    {ActionKind::AcceptFocus, "AcceptFocus"},   {ActionKind::RejectFocus, "RejectFocus"},
    {ActionKind::Ignore, "Ignore"},             {ActionKind::MoveObject, "MoveObject"},
    {ActionKind::ReleaseObject, "ReleaseObject"}, {ActionKind::FocusRect, "FocusRect"},
    {ActionKind::DrawBox, "DrawBox"},           {ActionKind::Answer, "Answer"},
};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<Direction> direction_letter(char c) {
  switch (c) {
    case 'a': case 'b': case 'c': case 'd':
    case 'A': case 'B': case 'C': case 'D':
      return direction_from_token(c);
    default:
      return std::nullopt;
  }
}

struct Scanner {
  std::string_view s;
  std::size_t i = 0;

  void skip(std::string_view chars) {
    while (i < s.size() && chars.find(s[i]) != std::string_view::npos) ++i;
  }
  std::optional<int> integer() {
    std::size_t j = i;
    if (j < s.size() && s[j] == '-') ++j;
    const std::size_t digits = j;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j == digits || j - digits > 7) return std::nullopt;
    const int v = std::stoi(std::string(s.substr(i, j - i)));
    i = j;
    return v;
  }
};

struct Candidate {
  std::size_t pos;
  std::string keyword;
  std::optional<Action> action;  // nullopt when malformed
};

// Every keyword occurrence, in text order.
std::vector<Candidate> scan_commands(std::string_view text) {
  std::vector<Candidate> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isupper(static_cast<unsigned char>(text[i])) || (i > 0 && is_word_char(text[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isupper(static_cast<unsigned char>(text[j]))) ++j;
    if (j < text.size() && is_word_char(text[j])) {
      i = j;
      continue;
    }
    const std::string word(text.substr(i, j - i));
    Scanner sc{text, j};
    Candidate c{i, word, std::nullopt};
    if (word == "MOVE") {
      sc.skip(" \t:([\"'");
      if (sc.i < text.size()) {
        const auto d = direction_letter(text[sc.i]);
        if (d && (sc.i + 1 >= text.size() || !is_word_char(text[sc.i + 1]))) {
          c.action = Action::move_cursor(*d);
          sc.i += 1;
        }
      }
    } else if (word == "RECT") {
      sc.skip(" \t:([");
      int v[4];
      bool ok = true;
      for (int k = 0; k < 4 && ok; ++k) {
        if (k > 0) sc.skip(" \t,;");
        const auto n = sc.integer();
        ok = n.has_value();
        if (ok) v[k] = *n;
      }
      if (ok) c.action = Action::rect({v[0], v[1]}, {v[2], v[3]});
    } else if (word == "ANSWER") {
      sc.skip(" \t");
      if (sc.i < text.size() && text[sc.i] == ':') {
        const std::size_t start = sc.i + 1;
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view body = trim(text.substr(start, end - start));
        if (!body.empty()) c.action = Action::answer(std::string(body));
        sc.i = end;  // keywords inside the answer text are not commands
      }
    } else if (word == "FOCUS") {
      c.action = Action::of(ActionKind::RequestFocus);
    } else if (word == "ACCEPT") {
      c.action = Action::of(ActionKind::AcceptFocus);
    } else if (word == "REJECT") {
      c.action = Action::of(ActionKind::RejectFocus);
    } else if (word == "IGNORE") {
      c.action = Action::of(ActionKind::Ignore);
    } else if (word == "RELEASE") {
      c.action = Action::of(ActionKind::ReleaseObject);
    } else if (word == "BOX") {
      c.action = Action::of(ActionKind::DrawBox);
    } else {
      i = j;
      continue;
    }
    out.push_back(std::move(c));
    i = std::max(sc.i, j);
  }
  return out;
}

// MOVE means whichever move the mode allows.
std::optional<Action> resolve(Action a, const ActionSet& legal) {
  if (a.kind == ActionKind::MoveCursor && !legal.contains(ActionKind::MoveCursor) &&
      legal.contains(ActionKind::MoveObject)) {
    a.kind = ActionKind::MoveObject;
  }
  if (!legal.contains(a.kind)) return std::nullopt;
  return a;
}

std::optional<Direction> bare_direction(std::string_view text) {
  const std::string_view t = trim(text);
  auto strip = [](std::string_view s) {
    s = trim(s);
    while (!s.empty() && std::string_view("\"'()[]*.!`").find(s.front()) != std::string_view::npos) s.remove_prefix(1);
    while (!s.empty() && std::string_view("\"'()[]*.!`").find(s.back()) != std::string_view::npos) s.remove_suffix(1);
    return trim(s);
  };
  const std::string_view whole = strip(t);
  if (whole.size() == 1) return direction_letter(whole[0]);

  // Trailing letter: the reply ends with a lone lower-case a-d.
  const std::string_view tail = strip(t);
  if (tail.size() >= 2 && std::isspace(static_cast<unsigned char>(tail[tail.size() - 2])) &&
      std::islower(static_cast<unsigned char>(tail.back()))) {
    if (auto d = direction_letter(tail.back())) return d;
  }
  std::optional<Direction> found;
  for (std::size_t p = t.find(':'); p != std::string_view::npos; p = t.find(':', p + 1)) {
    Scanner sc{t, p + 1};
    sc.skip(" \t\"'([*`");
    if (sc.i < t.size() && (sc.i + 1 >= t.size() || !is_word_char(t[sc.i + 1]))) {
      if (auto d = direction_letter(t[sc.i])) found = d;
    }
  }
  return found;
}

std::string token_list(const ActionSet& legal) {
  std::vector<std::string> parts;
  for (ActionKind k : legal.kinds()) {
    switch (k) {
      case ActionKind::MoveCursor:
      case ActionKind::MoveObject:
        if (std::find(parts.begin(), parts.end(), "MOVE a|b|c|d") == parts.end()) parts.emplace_back("MOVE a|b|c|d");
        break;
      case ActionKind::RequestFocus: parts.emplace_back("FOCUS"); break;
      case ActionKind::AcceptFocus: parts.emplace_back("ACCEPT"); break;
      case ActionKind::RejectFocus: parts.emplace_back("REJECT"); break;
      case ActionKind::Ignore: parts.emplace_back("IGNORE"); break;
      case ActionKind::ReleaseObject: parts.emplace_back("RELEASE"); break;
      case ActionKind::FocusRect: parts.emplace_back("RECT x1,y1,x2,y2"); break;
      case ActionKind::DrawBox: parts.emplace_back("BOX"); break;
      case ActionKind::Answer: parts.emplace_back("ANSWER: <text>"); break;
    }
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
  return out;
}

std::string describe(ActionKind k) {
  switch (k) {
    case ActionKind::MoveCursor: return "MOVE a|b|c|d - move the cursor up (a), down (b), left (c) or right (d)";
    case ActionKind::RequestFocus: return "FOCUS - segment the object under the cursor";
    case ActionKind::AcceptFocus: return "ACCEPT - the outlined region is the object you meant";
    case ActionKind::RejectFocus: return "REJECT - discard the outline and go back to the cursor";
    case ActionKind::Ignore: return "IGNORE - remove the selected object from the image";
    case ActionKind::MoveObject: return "MOVE a|b|c|d - move the selected object up (a), down (b), left (c) or right (d)";
    case ActionKind::ReleaseObject: return "RELEASE - leave the object where it is and go back to the cursor";
    case ActionKind::FocusRect:
      return "RECT x1,y1,x2,y2 - look only at the rectangle from (x1,y1) up to but excluding (x2,y2)";
    case ActionKind::DrawBox: return "BOX - draw a permanent box around the cursor";
    case ActionKind::Answer: return "ANSWER: <text> - give the final answer and stop";
  }
  return {};
}

}  // namespace

std::string_view action_kind_name(ActionKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<ActionKind> action_kind_from_name(std::string_view name) {
  for (const auto& [kind, n] : kKindNames) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

std::string format_action(const Action& a) {
  switch (a.kind) {
    case ActionKind::MoveCursor:
    case ActionKind::MoveObject: return std::string("MOVE ") + direction_token(a.dir);
    case ActionKind::RequestFocus: return "FOCUS";
    case ActionKind::AcceptFocus: return "ACCEPT";
    case ActionKind::RejectFocus: return "REJECT";
    case ActionKind::Ignore: return "IGNORE";
    case ActionKind::ReleaseObject: return "RELEASE";
    case ActionKind::DrawBox: return "BOX";
    case ActionKind::FocusRect:
      return "RECT " + std::to_string(a.top_left.x) + "," + std::to_string(a.top_left.y) + "," +
             std::to_string(a.bottom_right.x) + "," + std::to_string(a.bottom_right.y);
    case ActionKind::Answer: return "ANSWER: " + a.text;
  }
  return {};
}

std::vector<ActionKind> ActionSet::kinds() const {
  std::vector<ActionKind> out;
  for (const auto& [kind, name] : kKindNames) {
    if (contains(kind)) out.push_back(kind);
  }
  return out;
}

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::Cursor: return "cursor";
    case Mode::Verify: return "verify";
    case Mode::Object: return "object";
  }
  return "?";
}

std::string_view run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Full: return "full";
    case RunMode::CursorOnly: return "cursor-only";
    case RunMode::CursorOnlyWithBoxes: return "cursor-boxes";
    case RunMode::SamplingTournament: return "sampling";
  }
  return "?";
}

std::optional<RunMode> run_mode_from_name(std::string_view name) {
  for (RunMode m : {RunMode::Full, RunMode::CursorOnly, RunMode::CursorOnlyWithBoxes, RunMode::SamplingTournament}) {
    if (run_mode_name(m) == name) return m;
  }
  return std::nullopt;
}

ActionSet legal_actions(Mode mode, RunMode run_mode, bool allow_rect) {
  switch (run_mode) {
    case RunMode::CursorOnly: return {ActionKind::MoveCursor, ActionKind::Answer};
    case RunMode::CursorOnlyWithBoxes: return {ActionKind::MoveCursor, ActionKind::DrawBox, ActionKind::Answer};
    case RunMode::Full:
    case RunMode::SamplingTournament: break;
  }
  switch (mode) {
    case Mode::Cursor: {
      ActionSet s{ActionKind::MoveCursor, ActionKind::RequestFocus, ActionKind::Answer};
      if (allow_rect) s.insert(ActionKind::FocusRect);
      return s;
    }
    case Mode::Verify: return {ActionKind::AcceptFocus, ActionKind::RejectFocus};
    case Mode::Object:
      return {ActionKind::MoveObject, ActionKind::Ignore, ActionKind::ReleaseObject, ActionKind::Answer};
  }
  return {};
}

ParseResult parse_action(std::string_view raw, const ActionSet& legal) {
  const auto candidates = scan_commands(raw);
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    if (!it->action) continue;
    if (auto a = resolve(*it->action, legal)) return *a;
  }
  if (legal.contains(ActionKind::MoveCursor) || legal.contains(ActionKind::MoveObject)) {
    if (candidates.empty()) {
      if (auto d = bare_direction(raw)) return *resolve(Action::move_cursor(*d), legal);
    }
  }
  std::string msg;
  if (!candidates.empty()) {
    const Candidate& last = candidates.back();
    msg = last.action ? last.keyword + " is not available right now. "
                      : "Could not read the " + last.keyword + " command. ";
  } else {
    msg = "No command found in your reply. ";
  }
  msg += "Reply with exactly one of: " + token_list(legal) + ".";
  return ParseFailure{msg};
}

PromptBundle build_prompts(std::string_view task_plan, Mode mode, const ActionSet& legal) {
  if (trim(task_plan).empty()) throw Error(ErrorCode::InvalidArgument, "task plan must not be empty");
  PromptBundle b;
  b.system_prompt =
      "You reason about an image by acting on it. Each turn you see the current image, and the previous one "
      "when there is one. A magenta crosshair marks the cursor when it is active. Pick one command per turn; "
      "the image is updated and shown to you again.\n\n"
      "Task plan:\n";
  b.system_prompt += task_plan;
  b.system_prompt +=
      "\n\nCommands are written in capitals, for example MOVE c or FOCUS. Think briefly, then end your reply "
      "with the command. Directions: a = up, b = down, c = left, d = right. Steps start large and shrink each "
      "time you reverse direction.";

  switch (mode) {
    case Mode::Cursor: b.step_reminder = "The cursor is active."; break;
    case Mode::Verify: b.step_reminder = "A candidate object is outlined in green. Is it the object you meant?"; break;
    case Mode::Object: b.step_reminder = "An object is selected."; break;
  }
  b.step_reminder += " Available commands:";
  bool listed_move = false;
  for (ActionKind k : legal.kinds()) {
    if (k == ActionKind::MoveCursor || k == ActionKind::MoveObject) {
      if (listed_move) continue;
      listed_move = true;
    }
    b.step_reminder += "\n- " + describe(k);
  }
  return b;
}

EncodedImage EncodedImage::from(const Image& img) {
  EncodedImage e;
  auto png = std::make_shared<Bytes>(encode_png(img));
  e.digest = sha256_hex(*png);
  e.png = std::move(png);
  return e;
}

std::size_t ChatRequest::image_count() const {
  std::size_t n = 0;
  for (const auto& m : messages) {
    for (const auto& p : m.parts) n += p.kind == ChatPart::Kind::Image;
  }
  return n;
}

std::vector<TranscriptEntry> truncate_transcript(const std::vector<TranscriptEntry>& transcript,
                                                 std::size_t token_budget) {
  auto tokens = [](const std::vector<TranscriptEntry>& t, std::size_t from) {
    std::size_t chars = 0;
    for (std::size_t i = from; i < t.size(); ++i) chars += t[i].text.size();
    return (chars + 3) / 4;
  };
  // Steps start at assistant entries; the last two steps always stay.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    if (transcript[i].role == TranscriptEntry::Role::Assistant) starts.push_back(i);
  }
  std::size_t from = 0;
  for (std::size_t k = 0; k + 2 < starts.size() && tokens(transcript, from) > token_budget; ++k) {
    from = starts[k + 1];
  }
  return {transcript.begin() + static_cast<std::ptrdiff_t>(from), transcript.end()};
}

ChatRequest build_chat_request(const Observation& obs, const ChatOptions& opts) {
  ChatRequest req;
  req.model = opts.model;
  req.temperature = opts.temperature;
  req.messages.push_back({"system", {{ChatPart::Kind::Text, obs.prompts.system_prompt, {}}}});
  for (const auto& e : truncate_transcript(obs.transcript, opts.token_budget)) {
    req.messages.push_back(
        {e.role == TranscriptEntry::Role::Assistant ? "assistant" : "user", {{ChatPart::Kind::Text, e.text, {}}}});
  }
  ChatMessage turn{"user", {}};
  if (obs.previous && !obs.previous->empty()) {
    turn.parts.push_back({ChatPart::Kind::Text, "Previous image:", {}});
    turn.parts.push_back({ChatPart::Kind::Image, {}, *obs.previous});
  }
  if (!obs.current.empty()) {
    turn.parts.push_back({ChatPart::Kind::Text, "Current image:", {}});
    turn.parts.push_back({ChatPart::Kind::Image, {}, obs.current});
  }
  std::string reminder = obs.prompts.step_reminder;
  if (obs.correction) reminder = *obs.correction + "\n" + reminder;
  turn.parts.push_back({ChatPart::Kind::Text, reminder, {}});
  req.messages.push_back(std::move(turn));
  if (req.image_count() > kMaxImagesPerRequest) {
    throw Error(ErrorCode::InvalidArgument, "request would carry " + std::to_string(req.image_count()) + " images");
  }
  return req;
}

}  // namespace imagine
