// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "imagine/policy.hpp"
#include "imagine/scene2d.hpp"
#include "imagine/segmenter.hpp"

namespace imagine {

enum class FailureReason { ParseBudgetExceeded, BudgetExhausted, ProviderFailure, WrongAnswer };
std::string_view failure_reason_name(FailureReason r);
std::optional<FailureReason> failure_reason_from_name(std::string_view name);

struct Outcome {
  enum class Status { Running, Answered, Failed };
  Status status = Status::Running;
  std::string answer;                    // Answered
  std::optional<FailureReason> reason;   // Failed
  std::string detail;

  bool terminal() const { return status != Status::Running; }
  static Outcome answered(std::string text) { return {Status::Answered, std::move(text), std::nullopt, {}}; }
  static Outcome failed(FailureReason r, std::string detail) { return {Status::Failed, {}, r, std::move(detail)}; }
};
std::string_view outcome_status_name(Outcome::Status s);

struct Limits {
  /// Operator actions allowed; cursor moves and unparsable replies are free.
  int step_budget = 100;
  /// Focus steps allowed (a focus request or rectangle plus what follows it).
  std::optional<int> focus_budget;
  int max_policy_calls = 4000;
  int max_parse_failures = 3;  // consecutive
};

/// What an applied action did to the scene.
struct SceneEvent {
  std::string kind;    // e.g. cursor_moved, focus_candidate, move_refused, snapped
  std::string detail;  // feedback shown to the policy
  bool mutated = false;
  int subject = 0;  // task-defined id the event refers to, e.g. a jigsaw piece
};

/// Task-specific reactions to applied actions, such as jigsaw snapping.
class TaskHooks {
 public:
  virtual ~TaskHooks() = default;
  /// May adjust the scene and annotate the event. A returned message ends the
  /// episode with Failed(BudgetExhausted).
  virtual std::optional<std::string> after_action(const Action& action, Scene2D& scene, SceneEvent& event) = 0;
};
using HooksFactory = std::function<std::unique_ptr<TaskHooks>()>;

struct EpisodeConfig {
  std::string task_plan;
  RunMode run_mode = RunMode::Full;
  bool allow_rect = false;
  Limits limits;
  ChatOptions chat;
  bool keep_images = true;     // keep PNG bytes for the image store
  bool log_requests = false;   // keep each request as JSON with images by digest
};

struct TraceRecord {
  int seq = 0;  // strictly increasing, one per policy call
  int t = 0;    // operator actions taken before this record
  Mode mode = Mode::Cursor;
  std::vector<std::string> legal;  // action kind names
  std::string render_digest;       // SHA-256 of the PNG the policy saw
  std::optional<std::string> previous_digest;
  std::string base_digest;  // SHA-256 of the base layer pixels before the action
  std::string reminder;
  std::string raw;  // policy reply, verbatim
  std::optional<Action> action;
  bool applied = false;  // false for parse failures and actions refused by a budget
  std::string parse_error;
  SceneEvent event;
  std::optional<std::string> request;  // set with log_requests
};

struct EpisodeStats {
  int policy_calls = 0;
  int parse_failures = 0;
  int focus_steps = 0;
  std::size_t max_images_per_request = 0;
};

/// Applies one parsed action to the scene. Scene operator refusals become
/// events; provider outages throw Error(ProviderUnavailable | Timeout).
/// Without a segmenter, focus requests use the scene's own instance labels.
SceneEvent apply_action(Scene2D& scene, const Action& action, SegmentationProvider* segmenter, TaskHooks* hooks,
                        std::optional<std::string>* stop = nullptr);

/// The closed loop: observe, decide, parse, modify, record.
class Episode {
 public:
  Episode(Scene2D initial, Policy& policy, std::shared_ptr<SegmentationProvider> segmenter, EpisodeConfig cfg,
          std::unique_ptr<TaskHooks> hooks = nullptr);

  /// One policy call. Returns false once the episode is terminal.
  bool step();
  /// Steps until terminal.
  const Outcome& run();

  const Scene2D& initial_scene() const { return initial_; }
  const Scene2D& scene() const { return scene_; }
  const Outcome& outcome() const { return outcome_; }
  int t() const { return t_; }
  const EpisodeStats& stats() const { return stats_; }
  const std::vector<TraceRecord>& records() const { return records_; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  const EpisodeConfig& config() const { return cfg_; }
  /// PNG bytes by digest, filled when keep_images is set.
  const std::map<std::string, std::shared_ptr<const Bytes>>& images() const { return images_; }
  std::string final_render_digest() const;
  TaskHooks* hooks() const { return hooks_.get(); }

  /// Called with every outgoing request before the policy sees it.
  std::function<void(const ChatRequest&)> on_request;

 private:
  void fail(FailureReason r, std::string detail) { outcome_ = Outcome::failed(r, std::move(detail)); }

  Scene2D initial_;
  Scene2D scene_;
  Policy& policy_;
  std::shared_ptr<SegmentationProvider> segmenter_;
  EpisodeConfig cfg_;
  std::unique_ptr<TaskHooks> hooks_;
  Outcome outcome_;
  int t_ = 0;
  int consecutive_parse_failures_ = 0;
  EpisodeStats stats_;
  std::vector<TraceRecord> records_;
  std::vector<TranscriptEntry> transcript_;
  std::optional<EncodedImage> previous_;
  std::optional<std::string> correction_;
  std::map<std::string, std::shared_ptr<const Bytes>> images_;
};

std::string base_digest(const Image& img);
std::string render_digest(const Image& img);

struct ReplayResult {
  bool ok = true;
  std::size_t checked = 0;
  std::optional<int> first_mismatch;  // seq of the first record whose render differs
  Scene2D final_scene;
};

/// Re-applies the recorded actions to `initial` and compares every render
/// digest. Hooks come fresh from the factory so task state starts over.
ReplayResult replay(const Scene2D& initial, const std::vector<TraceRecord>& records,
                    SegmentationProvider* segmenter, const HooksFactory& hooks = nullptr);

// ---- trace store -----------------------------------------------------------

/// JSON Lines trace: a header line, one line per record, an outcome line.
/// Images go to `image_dir/<digest>.png`. Every string is scrubbed of the
/// given secrets before it is written.
void write_trace(const Episode& ep, const std::filesystem::path& jsonl, const std::filesystem::path& image_dir,
                 const std::string& header_json, const std::vector<std::string>& secrets = {});

struct LoadedTrace {
  std::string header_json;
  std::vector<TraceRecord> records;
  Outcome outcome;
};

/// Throws Error(SchemaMismatch) for foreign or malformed files.
LoadedTrace read_trace(const std::filesystem::path& jsonl);

std::string trace_record_json(const TraceRecord& r);
TraceRecord trace_record_from_json(const std::string& line);

// ---- baselines and sweeps --------------------------------------------------

struct Match {
  int round = 0;
  std::size_t first = 0;   // candidate indices
  std::size_t second = 0;
  std::size_t winner = 0;
  std::string raw;
};

struct TournamentResult {
  std::size_t winner = 0;
  std::vector<Match> bracket;
  std::optional<Outcome> failure;  // set when the comparator failed
  std::size_t max_images_per_request = 0;
};

/// Side-by-side render of two candidates with a gap, as the comparator sees it.
Image side_by_side(const Image& left, const Image& right);

/// Parses a comparator reply: the last standalone 1 or 2.
std::optional<int> parse_choice(std::string_view raw);

/// Single-elimination tournament over `candidates` in the given order. Odd
/// counts give the last candidate of a round a bye; n candidates always take
/// n - 1 comparisons. The comparator sees one side-by-side image per match
/// and the pair through Observation::compared.
TournamentResult run_sampling_tournament(const std::vector<Scene2D>& candidates, Policy& comparator,
                                         const std::string& task_plan, const ChatOptions& chat = {});

struct SweepRow {
  int budget = 0;
  int solved = 0;
  int total = 0;
  double solvable_rate = 0;
};

/// For each budget (ascending), the fraction of instances `solve` reports as
/// answered correctly. Throws Error(InvalidArgument) for unsorted budgets.
std::vector<SweepRow> step_budget_sweep(std::size_t n_instances, const std::vector<int>& budgets,
                                        const std::function<bool(std::size_t instance, int budget)>& solve);

}  // namespace imagine
