// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/error.hpp"
#include "imagine/tasks.hpp"

namespace imagine {

namespace {

EpisodeConfig base_config(std::string plan, RunMode mode, int step_budget) {
  EpisodeConfig cfg;
  cfg.task_plan = std::move(plan);
  cfg.run_mode = mode;
  cfg.limits.step_budget = step_budget;
  return cfg;
}

}  // namespace

TaskEpisodeSetup episode_setup(const TaskInstance& inst, RunMode mode) {
  if (mode == RunMode::SamplingTournament) {
    throw Error(ErrorCode::InvalidArgument, "the sampling baseline runs as a tournament, not an episode");
  }
  TaskEpisodeSetup s;
  if (const auto* c = std::get_if<CountingInstance>(&inst)) {
    s.scene = make_scene(c->base, c->labels);
    s.config = base_config(counting_plan(), mode, counting_step_budget(c->n));
  } else if (const auto* g = std::get_if<JigsawInstance>(&inst)) {
    s.scene = make_scene(g->base, g->labels);
    s.config = base_config(jigsaw_plan(), mode, g->step_budget);
    auto shared = std::make_shared<JigsawInstance>(*g);
    s.hooks = [shared] { return make_jigsaw_hooks(*shared); };
  } else if (const auto* p = std::get_if<PlacementInstance>(&inst)) {
    s.scene = make_scene(p->base, p->labels, p->platform);
    s.config = base_config(placement_plan(*p), mode, p->step_budget);
  } else if (const auto* q = std::get_if<QaInstance>(&inst)) {
    s.scene = make_scene(q->base, q->labels);
    s.config = base_config(qa_plan(*q), mode, q->step_budget);
    s.config.allow_rect = true;
  }
  return s;
}

std::unique_ptr<Policy> oracle_for(const TaskInstance& inst, RunMode mode) {
  if (std::holds_alternative<CountingInstance>(inst)) return counting_oracle(mode);
  if (const auto* g = std::get_if<JigsawInstance>(&inst)) return jigsaw_oracle(*g);
  if (const auto* p = std::get_if<PlacementInstance>(&inst)) {
    return mode == RunMode::SamplingTournament ? placement_comparator(*p) : placement_oracle(*p);
  }
  return qa_oracle(std::get<QaInstance>(inst));
}

EpisodeScore score_episode(const TaskInstance& inst, const Episode& ep) {
  EpisodeScore s;
  const Outcome& o = ep.outcome();
  if (const auto* c = std::get_if<CountingInstance>(&inst)) {
    s.truth = c->n;
    if (o.status == Outcome::Status::Answered) s.predicted = parse_count(o.answer);
    s.correct = s.predicted == c->n;
  } else if (const auto* g = std::get_if<JigsawInstance>(&inst)) {
    s.snapped = jigsaw_completed(*g, ep.scene());
    s.missing = static_cast<int>(g->pieces.size());
    s.correct = s.snapped == s.missing;
  } else if (const auto* p = std::get_if<PlacementInstance>(&inst)) {
    s.placement = evaluate_placement(*p, ep.scene());
    s.correct = s.placement.placed;
  } else if (const auto* q = std::get_if<QaInstance>(&inst)) {
    s.correct = o.status == Outcome::Status::Answered && grade_qa(o.answer, q->truth);
  }
  return s;
}

const std::vector<ReferenceRow>& reference_results() {
  static const std::vector<ReferenceRow> rows = {
      {"counting", "synthetic", "success_rate", 0.853},
      {"counting", "synthetic", "mean_error", 0.19},
      {"counting", "synthetic", "variance", 0.22},
      {"jigsaw", "4-missing", "completion_rate", 0.682},
      {"jigsaw", "6-missing", "completion_rate", 0.515},
      {"placement", "real-images", "locating_rate", 0.694},
      {"placement", "real-images", "placement_rate", 0.373},
      {"qa", "multi-object", "accuracy", 0.65},
  };
  return rows;
}

}  // namespace imagine
