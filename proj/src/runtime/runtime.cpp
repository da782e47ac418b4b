// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/runtime.hpp"

#include <algorithm>
#include <cctype>

#include "imagine/digest.hpp"
#include "imagine/error.hpp"

namespace imagine {

namespace {

Mode mode_of(const Scene2D& scene) {
  switch (scene.focus.kind) {
    case FocusTarget::Kind::Cursor: return Mode::Cursor;
    case FocusTarget::Kind::Pending: return Mode::Verify;
    case FocusTarget::Kind::Object: return Mode::Object;
  }
  return Mode::Cursor;
}

std::string point_text(PixelPoint p) { return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")"; }

// Remembers the error code of a provider failure that request_focus folds
// into SegmentationFailed.
class OutageProbe final : public SegmentationProvider {
 public:
  explicit OutageProbe(SegmentationProvider& inner) : inner_(inner) {}
  std::optional<ErrorCode> code;

 private:
  SegmentResponse do_segment(const SegmentRequest& req) override {
    try {
      return inner_.segment(req);
    } catch (const Error& e) {
      code = e.code();
      throw;
    }
  }
  SegmentationProvider& inner_;
};

bool is_outage(ErrorCode c) { return c == ErrorCode::ProviderUnavailable || c == ErrorCode::Timeout; }

}  // namespace

std::string_view failure_reason_name(FailureReason r) {
  switch (r) {
    case FailureReason::ParseBudgetExceeded: return "ParseBudgetExceeded";
    case FailureReason::BudgetExhausted: return "BudgetExhausted";
    case FailureReason::ProviderFailure: return "ProviderFailure";
    case FailureReason::WrongAnswer: return "WrongAnswer";
  }
  return "?";
}

std::optional<FailureReason> failure_reason_from_name(std::string_view name) {
  for (FailureReason r : {FailureReason::ParseBudgetExceeded, FailureReason::BudgetExhausted,
                          FailureReason::ProviderFailure, FailureReason::WrongAnswer}) {
    if (failure_reason_name(r) == name) return r;
  }
  return std::nullopt;
}

std::string_view outcome_status_name(Outcome::Status s) {
  switch (s) {
    case Outcome::Status::Running: return "running";
    case Outcome::Status::Answered: return "answered";
    case Outcome::Status::Failed: return "failed";
  }
  return "?";
}

std::string base_digest(const Image& img) {
  return sha256_hex(std::to_string(img.width()) + "x" + std::to_string(img.height()) + ":" +
                    sha256_hex(img.bytes()));
}

std::string render_digest(const Image& img) { return sha256_hex(encode_png(img)); }

SceneEvent apply_action(Scene2D& scene, const Action& a, SegmentationProvider* segmenter, TaskHooks* hooks,
                        std::optional<std::string>* stop) {
  SceneEvent ev;
  try {
    switch (a.kind) {
      case ActionKind::MoveCursor: {
        scene = move_cursor(scene, a.dir);
        ev = {"cursor_moved",
              "Cursor moved " + std::string(direction_name(a.dir)) + " to " + point_text(scene.cursor) +
                  ". Step size is now " + std::to_string(scene.step.current) + " px.",
              true};
        break;
      }
      case ActionKind::RequestFocus: {
        std::optional<InstanceMapOracle> own;
        SegmentationProvider* provider = segmenter;
        if (!provider) {
          LabelMap labels = render_labels(scene);
          if (labels.empty()) throw Error(ErrorCode::SegmentationFailed, "scene has no instance labels");
          own.emplace(std::move(labels));
          provider = &*own;
        }
        OutageProbe probe(*provider);
        try {
          auto r = request_focus(scene, probe);
          scene = std::move(r.scene);
          ev = {"focus_candidate", "A candidate object is outlined in green. Check whether it is the object you meant.",
                true};
        } catch (const Error& e) {
          if (probe.code && is_outage(*probe.code)) throw Error(*probe.code, e.what());
          if (e.code() != ErrorCode::SegmentationFailed) throw;
          ev = {"focus_failed", "Nothing could be segmented at the cursor.", false};
        }
        break;
      }
      case ActionKind::AcceptFocus:
        scene = accept_focus(scene);
        ev = {"accepted", "Object " + std::to_string(scene.focus.id) + " is selected.", true};
        break;
      case ActionKind::RejectFocus:
        scene = reject_focus(scene);
        ev = {"rejected", "Outline discarded. The cursor is active again.", true};
        break;
      case ActionKind::Ignore:
        scene = ignore(scene);
        ev = {"ignored", "The object was removed from the image. The cursor is active again.", true};
        break;
      case ActionKind::MoveObject: {
        auto r = move_object(scene, a.dir);
        if (r.refused) {
          ev = {"move_refused", "That move would take the object outside the allowed area. It did not move.", false};
        } else {
          scene = std::move(r.scene);
          const ObjectLayer* l = scene.find_layer(scene.focus.id);
          ev = {"object_moved",
                "Object moved " + std::string(direction_name(a.dir)) + " to " + point_text(l->location()) +
                    ". Step size is now " + std::to_string(scene.step.current) + " px.",
                true};
        }
        break;
      }
      case ActionKind::ReleaseObject:
        scene = release_object(scene);
        ev = {"released", "Object released. The cursor is active again.", true};
        break;
      case ActionKind::FocusRect:
        try {
          scene = focus_rect(scene, a.top_left, a.bottom_right);
          ev = {"rect_focused", "Showing the rectangle " + point_text(a.top_left) + " to " + point_text(a.bottom_right) + ".",
                true};
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateRect) throw;
          ev = {"rect_invalid", "That rectangle has no area inside the image.", false};
        }
        break;
      case ActionKind::DrawBox:
        scene = draw_marker(scene);
        ev = {"box_drawn", "Box drawn at " + point_text(scene.cursor) + ".", true};
        break;
      case ActionKind::Answer:
        return {"answer", "Answer recorded.", false};
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::WrongFocus) throw;
    return {"refused", std::string("Not possible right now: ") + e.what(), false};
  }
  if (hooks) {
    auto msg = hooks->after_action(a, scene, ev);
    if (stop) *stop = std::move(msg);
  }
  return ev;
}

Episode::Episode(Scene2D initial, Policy& policy, std::shared_ptr<SegmentationProvider> segmenter, EpisodeConfig cfg,
                 std::unique_ptr<TaskHooks> hooks)
    : initial_(initial),
      scene_(std::move(initial)),
      policy_(policy),
      segmenter_(std::move(segmenter)),
      cfg_(std::move(cfg)),
      hooks_(std::move(hooks)) {
  if (cfg_.limits.step_budget < 0) throw Error(ErrorCode::InvalidArgument, "step budget must be non-negative");
  if (cfg_.limits.max_parse_failures < 1) throw Error(ErrorCode::InvalidArgument, "max_parse_failures must be >= 1");
}

std::string Episode::final_render_digest() const { return render_digest(render_view(scene_)); }

bool Episode::step() {
  if (outcome_.terminal()) return false;
  const Limits& lim = cfg_.limits;
  if (t_ >= lim.step_budget) {
    fail(FailureReason::BudgetExhausted, "step budget of " + std::to_string(lim.step_budget) + " actions used up");
    return false;
  }
  if (stats_.policy_calls >= lim.max_policy_calls) {
    fail(FailureReason::BudgetExhausted, "policy call cap of " + std::to_string(lim.max_policy_calls) + " reached");
    return false;
  }

  Observation obs;
  obs.t = t_;
  obs.mode = mode_of(scene_);
  obs.legal = legal_actions(obs.mode, cfg_.run_mode, cfg_.allow_rect);
  obs.current = EncodedImage::from(render_view(scene_));
  obs.previous = previous_;
  obs.transcript = transcript_;
  obs.prompts = build_prompts(cfg_.task_plan, obs.mode, obs.legal);
  obs.correction = correction_;
  obs.scene = &scene_;

  const ChatRequest request = build_chat_request(obs, cfg_.chat);
  stats_.max_images_per_request = std::max(stats_.max_images_per_request, request.image_count());
  if (on_request) on_request(request);

  TraceRecord rec;
  rec.seq = static_cast<int>(records_.size());
  rec.t = t_;
  rec.mode = obs.mode;
  for (ActionKind k : obs.legal.kinds()) rec.legal.emplace_back(action_kind_name(k));
  rec.render_digest = obs.current.digest;
  if (previous_) rec.previous_digest = previous_->digest;
  rec.base_digest = base_digest(scene_.base);
  rec.reminder = obs.prompts.step_reminder;
  if (cfg_.log_requests) rec.request = chat_request_json(request, false);
  if (cfg_.keep_images) {
    images_.emplace(obs.current.digest, obs.current.png);
  }

  try {
    rec.raw = policy_.decide(obs, request);
  } catch (const Error& e) {
    ++stats_.policy_calls;
    fail(e.code() == ErrorCode::BudgetExhausted ? FailureReason::BudgetExhausted : FailureReason::ProviderFailure,
         e.what());
    return false;
  }
  ++stats_.policy_calls;
  previous_ = obs.current;
  transcript_.push_back({TranscriptEntry::Role::Assistant, rec.raw});

  ParseResult parsed = parse_action(rec.raw, obs.legal);
  if (auto* failure = std::get_if<ParseFailure>(&parsed)) {
    ++stats_.parse_failures;
    ++consecutive_parse_failures_;
    rec.parse_error = failure->message;
    rec.event = {"parse_failure", failure->message, false};
    correction_ = failure->message;
    transcript_.push_back({TranscriptEntry::Role::User, failure->message});
    records_.push_back(std::move(rec));
    if (consecutive_parse_failures_ >= lim.max_parse_failures) {
      fail(FailureReason::ParseBudgetExceeded,
           std::to_string(consecutive_parse_failures_) + " consecutive unparsable replies");
    }
    return !outcome_.terminal();
  }
  consecutive_parse_failures_ = 0;
  correction_.reset();
  const Action action = std::get<Action>(parsed);
  rec.action = action;

  const bool focus_step = action.kind == ActionKind::RequestFocus || action.kind == ActionKind::FocusRect;
  if (focus_step && lim.focus_budget && stats_.focus_steps >= *lim.focus_budget) {
    rec.event = {"budget_exhausted", "No focus steps left.", false};
    transcript_.push_back({TranscriptEntry::Role::User, rec.event.detail});
    records_.push_back(std::move(rec));
    fail(FailureReason::BudgetExhausted, "focus budget of " + std::to_string(*lim.focus_budget) + " steps used up");
    return false;
  }
  if (action.kind != ActionKind::MoveCursor) ++t_;
  if (focus_step) ++stats_.focus_steps;

  std::optional<std::string> stop;
  try {
    rec.event = apply_action(scene_, action, segmenter_.get(), hooks_.get(), &stop);
  } catch (const Error& e) {
    rec.event = {"provider_failure", e.what(), false};
    records_.push_back(std::move(rec));
    fail(FailureReason::ProviderFailure, e.what());
    return false;
  }
  rec.applied = true;
  transcript_.push_back({TranscriptEntry::Role::User, rec.event.detail});
  records_.push_back(std::move(rec));

  if (action.kind == ActionKind::Answer) {
    outcome_ = Outcome::answered(action.text);
  } else if (stop) {
    fail(FailureReason::BudgetExhausted, *stop);
  }
  return !outcome_.terminal();
}

const Outcome& Episode::run() {
  while (step()) {
  }
  return outcome_;
}

ReplayResult replay(const Scene2D& initial, const std::vector<TraceRecord>& records, SegmentationProvider* segmenter,
                    const HooksFactory& hooks_factory) {
  ReplayResult out;
  Scene2D scene = initial;
  std::unique_ptr<TaskHooks> hooks = hooks_factory ? hooks_factory() : nullptr;
  for (const TraceRecord& r : records) {
    ++out.checked;
    if (render_digest(render_view(scene)) != r.render_digest) {
      out.ok = false;
      out.first_mismatch = r.seq;
      break;
    }
    if (r.action && r.applied) apply_action(scene, *r.action, segmenter, hooks.get());
  }
  out.final_scene = std::move(scene);
  return out;
}

// ---- baselines and sweeps --------------------------------------------------

Image side_by_side(const Image& left, const Image& right) {
  constexpr int kGap = 8;
  const int h = std::max(left.height(), right.height());
  Image out(left.width() + kGap + right.width(), h, {128, 128, 128, 255});
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < left.width(); ++x) out.set(x, y, left.at(x, y));
  }
  for (int y = 0; y < right.height(); ++y) {
    for (int x = 0; x < right.width(); ++x) out.set(left.width() + kGap + x, y, right.at(x, y));
  }
  return out;
}

std::optional<int> parse_choice(std::string_view raw) {
  std::optional<int> found;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '1' && raw[i] != '2') continue;
    const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
    const bool right_ok = i + 1 >= raw.size() || !std::isalnum(static_cast<unsigned char>(raw[i + 1]));
    if (left_ok && right_ok) found = raw[i] - '0';
  }
  return found;
}

TournamentResult run_sampling_tournament(const std::vector<Scene2D>& candidates, Policy& comparator,
                                         const std::string& task_plan, const ChatOptions& chat) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "tournament needs at least one candidate");
  TournamentResult result;
  PromptBundle prompts;
  prompts.system_prompt =
      "You compare two candidate outcomes of the same task, shown side by side: candidate 1 on the left, "
      "candidate 2 on the right.\n\nTask plan:\n" + task_plan;
  prompts.step_reminder = "Which candidate completes the task better? End your reply with 1 or 2.";

  std::vector<std::size_t> alive(candidates.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  int round = 1;
  while (alive.size() > 1) {
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < alive.size(); i += 2) {
      if (i + 1 >= alive.size()) {
        next.push_back(alive[i]);
        continue;
      }
      const std::size_t a = alive[i];
      const std::size_t b = alive[i + 1];
      Observation obs;
      obs.mode = Mode::Cursor;
      obs.current = EncodedImage::from(side_by_side(render_clean(candidates[a]), render_clean(candidates[b])));
      obs.prompts = prompts;
      obs.compared = {&candidates[a], &candidates[b]};
      std::optional<int> choice;
      std::string raw;
      for (int attempt = 0; attempt < 3 && !choice; ++attempt) {
        const ChatRequest req = build_chat_request(obs, chat);
        result.max_images_per_request = std::max(result.max_images_per_request, req.image_count());
        try {
          raw = comparator.decide(obs, req);
        } catch (const Error& e) {
          result.failure = Outcome::failed(FailureReason::ProviderFailure, e.what());
          return result;
        }
        choice = parse_choice(raw);
        if (!choice) {
          obs.transcript.push_back({TranscriptEntry::Role::Assistant, raw});
          obs.correction = "Reply with 1 (left) or 2 (right).";
        }
      }
      if (!choice) {
        result.failure = Outcome::failed(FailureReason::ParseBudgetExceeded, "comparator gave no choice");
        return result;
      }
      const std::size_t w = *choice == 1 ? a : b;
      result.bracket.push_back({round, a, b, w, raw});
      next.push_back(w);
    }
    alive = std::move(next);
    ++round;
  }
  result.winner = alive.front();
  return result;
}

std::vector<SweepRow> step_budget_sweep(std::size_t n_instances, const std::vector<int>& budgets,
                                        const std::function<bool(std::size_t, int)>& solve) {
  if (!std::is_sorted(budgets.begin(), budgets.end())) {
    throw Error(ErrorCode::InvalidArgument, "sweep budgets must be sorted ascending");
  }
  std::vector<SweepRow> rows;
  for (int b : budgets) {
    if (b < 0) throw Error(ErrorCode::InvalidArgument, "sweep budgets must be non-negative");
    SweepRow row{b, 0, static_cast<int>(n_instances), 0.0};
    for (std::size_t i = 0; i < n_instances; ++i) row.solved += solve(i, b) ? 1 : 0;
    row.solvable_rate = n_instances ? static_cast<double>(row.solved) / static_cast<double>(n_instances) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace imagine
