// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <functional>
#include <thread>

#include <json.hpp>

#include "imagine/error.hpp"
#include "imagine/runtime.hpp"

namespace imagine {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "imagine-trace";
constexpr int kVersion = 1;

Mode mode_from_name(const std::string& s) {
  for (Mode m : {Mode::Cursor, Mode::Verify, Mode::Object}) {
    if (mode_name(m) == s) return m;
  }
  throw Error(ErrorCode::SchemaMismatch, "unknown mode " + s);
}

json action_json(const Action& a) {
  json j = {{"kind", action_kind_name(a.kind)}, {"command", format_action(a)}};
  if (a.kind == ActionKind::MoveCursor || a.kind == ActionKind::MoveObject) {
    j["dir"] = std::string(1, direction_token(a.dir));
  }
  if (a.kind == ActionKind::FocusRect) {
    j["rect"] = {a.top_left.x, a.top_left.y, a.bottom_right.x, a.bottom_right.y};
  }
  if (a.kind == ActionKind::Answer) j["text"] = a.text;
  return j;
}

Action action_from_json(const json& j) {
  const auto kind = action_kind_from_name(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::SchemaMismatch, "unknown action kind");
  Action a = Action::of(*kind);
  if (j.contains("dir")) {
    const auto d = direction_from_token(j["dir"].get<std::string>().at(0));
    if (!d) throw Error(ErrorCode::SchemaMismatch, "bad direction token");
    a.dir = *d;
  }
  if (j.contains("rect")) {
    const auto r = j["rect"].get<std::vector<int>>();
    if (r.size() != 4) throw Error(ErrorCode::SchemaMismatch, "rect needs four numbers");
    a.top_left = {r[0], r[1]};
    a.bottom_right = {r[2], r[3]};
  }
  if (j.contains("text")) a.text = j["text"].get<std::string>();
  return a;
}

std::string scrub(std::string line, const std::vector<std::string>& secrets) {
  for (const auto& s : secrets) line = redact(std::move(line), s);
  return line;
}

}  // namespace

std::string trace_record_json(const TraceRecord& r) {
  json j = {{"type", "step"},
            {"seq", r.seq},
            {"t", r.t},
            {"mode", mode_name(r.mode)},
            {"legal", r.legal},
            {"render", r.render_digest},
            {"previous", r.previous_digest ? json(*r.previous_digest) : json(nullptr)},
            {"base", r.base_digest},
            {"reminder", r.reminder},
            {"raw", r.raw},
            {"action", r.action ? action_json(*r.action) : json(nullptr)},
            {"applied", r.applied},
            {"parse_error", r.parse_error},
            {"event",
             {{"kind", r.event.kind},
              {"detail", r.event.detail},
              {"mutated", r.event.mutated},
              {"subject", r.event.subject}}}};
  if (r.request) j["request"] = json::parse(*r.request);
  return j.dump();
}

TraceRecord trace_record_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    if (j.at("type") != "step") throw Error(ErrorCode::SchemaMismatch, "not a step record");
    TraceRecord r;
    r.seq = j.at("seq").get<int>();
    r.t = j.at("t").get<int>();
    r.mode = mode_from_name(j.at("mode").get<std::string>());
    r.legal = j.at("legal").get<std::vector<std::string>>();
    r.render_digest = j.at("render").get<std::string>();
    if (!j.at("previous").is_null()) r.previous_digest = j["previous"].get<std::string>();
    r.base_digest = j.at("base").get<std::string>();
    r.reminder = j.at("reminder").get<std::string>();
    r.raw = j.at("raw").get<std::string>();
    if (!j.at("action").is_null()) r.action = action_from_json(j["action"]);
    r.applied = j.at("applied").get<bool>();
    r.parse_error = j.at("parse_error").get<std::string>();
    const json& e = j.at("event");
    r.event = {e.at("kind").get<std::string>(), e.at("detail").get<std::string>(), e.at("mutated").get<bool>(),
               e.value("subject", 0)};
    if (j.contains("request")) r.request = j["request"].dump();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed trace record: ") + e.what());
  }
}

void write_trace(const Episode& ep, const std::filesystem::path& jsonl, const std::filesystem::path& image_dir,
                 const std::string& header_json, const std::vector<std::string>& secrets) {
  std::filesystem::create_directories(image_dir);
  if (jsonl.has_parent_path()) std::filesystem::create_directories(jsonl.parent_path());
  for (const auto& [digest, png] : ep.images()) {
    const auto path = image_dir / (digest + ".png");
    if (std::filesystem::exists(path)) continue;
    // Concurrent writers of the same digest each rename a private copy.
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    write_file(tmp, *png);
    std::filesystem::rename(tmp, path);
  }

  std::ofstream out(jsonl, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + jsonl.string());

  json header = header_json.empty() ? json::object() : json::parse(header_json);
  const EpisodeConfig& cfg = ep.config();
  header["type"] = "header";
  header["schema"] = kSchema;
  header["version"] = kVersion;
  header["run_mode"] = run_mode_name(cfg.run_mode);
  header["task_plan"] = cfg.task_plan;
  header["limits"] = {{"step_budget", cfg.limits.step_budget},
                      {"focus_budget", cfg.limits.focus_budget ? json(*cfg.limits.focus_budget) : json(nullptr)},
                      {"max_policy_calls", cfg.limits.max_policy_calls},
                      {"max_parse_failures", cfg.limits.max_parse_failures}};
  header["initial_render"] = render_digest(render_view(ep.initial_scene()));
  header["initial_base"] = base_digest(ep.initial_scene().base);
  out << scrub(header.dump(), secrets) << '\n';

  for (const auto& r : ep.records()) out << scrub(trace_record_json(r), secrets) << '\n';

  const Outcome& o = ep.outcome();
  const EpisodeStats& st = ep.stats();
  const json outcome = {{"type", "outcome"},
                        {"status", outcome_status_name(o.status)},
                        {"answer", o.answer},
                        {"reason", o.reason ? json(failure_reason_name(*o.reason)) : json(nullptr)},
                        {"detail", o.detail},
                        {"t", ep.t()},
                        {"policy_calls", st.policy_calls},
                        {"parse_failures", st.parse_failures},
                        {"focus_steps", st.focus_steps},
                        {"max_images_per_request", st.max_images_per_request},
                        {"final_render", ep.final_render_digest()},
                        {"final_base", base_digest(ep.scene().base)}};
  out << scrub(outcome.dump(), secrets) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing " + jsonl.string());
}

LoadedTrace read_trace(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + jsonl.string());
  LoadedTrace t;
  std::string line;
  bool have_header = false;
  bool have_outcome = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (j.value("schema", "") != kSchema || j.value("version", 0) != kVersion) {
          throw Error(ErrorCode::SchemaMismatch, "not an imagine trace (version " + std::to_string(kVersion) + ")");
        }
        t.header_json = line;
        have_header = true;
      } else if (type == "step") {
        if (!have_header) throw Error(ErrorCode::SchemaMismatch, "step record before header");
        t.records.push_back(trace_record_from_json(line));
      } else if (type == "outcome") {
        const std::string status = j.at("status").get<std::string>();
        t.outcome.status = status == "answered" ? Outcome::Status::Answered
                           : status == "failed" ? Outcome::Status::Failed
                                                : Outcome::Status::Running;
        t.outcome.answer = j.at("answer").get<std::string>();
        if (!j.at("reason").is_null()) t.outcome.reason = failure_reason_from_name(j["reason"].get<std::string>());
        t.outcome.detail = j.at("detail").get<std::string>();
        have_outcome = true;
      } else {
        throw Error(ErrorCode::SchemaMismatch, "unknown record type " + type);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed trace: ") + e.what());
  }
  if (!have_header || !have_outcome) throw Error(ErrorCode::SchemaMismatch, "trace is missing its header or outcome");
  return t;
}

}  // namespace imagine
