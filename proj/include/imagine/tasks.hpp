// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "imagine/policy.hpp"
#include "imagine/runtime.hpp"
#include "imagine/scene2d.hpp"

namespace imagine {

enum class TaskKind { Counting, Jigsaw, Placement, QA };
std::string_view task_kind_name(TaskKind k);
std::optional<TaskKind> task_kind_from_name(std::string_view name);

// ---- shared scene material -------------------------------------------------

/// Seeded generator whose draws depend only on the raw engine output, so
/// instances are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [lo, hi].
  int uniform_int(int lo, int hi);
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1))]);
  }

 private:
  std::mt19937_64 engine_;
};

enum class ShapeKind { Circle, Square, Star };
std::string_view shape_name(ShapeKind s);

struct NamedColor {
  std::string name;
  Rgba rgba;
};
/// Distinct, nameable object colors.
const std::vector<NamedColor>& palette();

/// Pixels of a shape of the given size (circumscribed diameter) centred at
/// (cx, cy) and rotated by `rotation` radians.
Mask rasterize_shape(ShapeKind shape, double cx, double cy, double size, double rotation, int width, int height);

struct ObjectInfo {
  int id = 0;  // instance id in the label map
  ShapeKind shape = ShapeKind::Circle;
  std::string color;
  Rect bbox;               // visible pixels
  std::size_t area = 0;    // full shape area
  std::size_t visible = 0;
};

// ---- counting --------------------------------------------------------------

struct CountingOptions {
  int width = 256;
  int height = 256;
  int min_size = 18;
  int max_size = 30;
  double min_visible = 0.3;  // visible fraction of every object
  int min_core = 16;         // visible pixels at least 3 px away from any other object
  double overlap_probability = 0.3;
  int max_attempts = 5000;
};

struct CountingInstance {
  std::uint64_t seed = 0;
  int n = 0;
  Image base;
  LabelMap labels;  // ids 1..n, one connected region each
  Image reference;  // background without objects
  std::vector<ObjectInfo> objects;
};

/// Throws Error(PackingFailed) when the objects do not fit.
CountingInstance gen_counting(std::uint64_t seed, int n, const CountingOptions& opts = {});
std::string counting_plan();
inline int counting_step_budget(int n) { return 4 * n + 10; }

/// First integer in the answer, digits or an English number word.
std::optional<int> parse_count(std::string_view answer);

struct CountingMetrics {
  int n = 0;
  double success_rate = 0;
  double mean_error = 0;
  double variance = 0;  // population variance of |pred - true|
};

/// Unparsable answers count as failures with error = true count.
CountingMetrics score_counting(const std::vector<std::optional<int>>& predictions, const std::vector<int>& truths);

// ---- jigsaw ----------------------------------------------------------------

struct JigsawOptions {
  int cell = 40;
  int tray_gap = 10;
  int attempts_budget = 20;
  int actions_per_piece = 40;
};

struct JigsawPiece {
  int id = 0;  // label of the piece in the tray
  int row = 0;
  int col = 0;
  PixelPoint tray_offset;  // top-left in the tray
  PixelPoint slot_offset;  // top-left on the board
  PixelPoint slot_center;  // location of a piece sitting in its slot
};

struct JigsawInstance {
  std::uint64_t seed = 0;
  int rows = 0;
  int cols = 0;
  int cell = 40;
  Image source;  // the complete board
  Image base;    // board with black holes plus the tray
  LabelMap labels;
  std::vector<JigsawPiece> pieces;
  double snap_radius = 20;
  int attempts_budget = 20;
  int step_budget = 0;
};

/// Throws Error(InvalidArgument) naming the offending field.
void validate_jigsaw_params(int rows, int cols, int n_missing);
/// A synthetic picture to cut when no source is given.
Image synth_jigsaw_source(std::uint64_t seed, int width, int height);
JigsawInstance gen_jigsaw(std::uint64_t seed, int rows, int cols, int n_missing, const Image* source = nullptr,
                          const JigsawOptions& opts = {});
std::string jigsaw_plan();

/// Slot centre when `location` is within the snap radius of the piece's
/// slot, nullopt otherwise.
std::optional<PixelPoint> snap(const JigsawInstance& inst, int piece_id, PixelPoint location);

/// Snaps released pieces, counts attempts and stops at the attempt cap.
/// Events: "snapped" or "unsnapped" with the piece id as subject.
std::unique_ptr<TaskHooks> make_jigsaw_hooks(const JigsawInstance& inst);
/// Pieces sitting in their slots in `scene`.
int jigsaw_completed(const JigsawInstance& inst, const Scene2D& scene);
/// Pieces snapped at the end of a trace, from its events.
int jigsaw_completed_from_trace(const std::vector<TraceRecord>& records);

struct JigsawMetrics {
  int snapped = 0;
  int missing = 0;
  double completion_rate = 0;
};
/// Pairs of (snapped, missing) per instance.
JigsawMetrics score_jigsaw(const std::vector<std::pair<int, int>>& per_instance);

// ---- placement -------------------------------------------------------------

struct PlacementOptions {
  int width = 256;
  int height = 256;
  int n_objects = 4;
  int min_region_area = 200;
};

struct PlacementInstance {
  std::uint64_t seed = 0;
  Image base;
  LabelMap labels;
  Mask platform;             // movement constraint
  std::vector<Mask> regions; // any of them is a correct placement
  int target_id = 0;         // 0 when unknown (imported data)
  int anchor_id = 0;
  std::string relation;
  std::string prompt;
  std::vector<ObjectInfo> objects;
  int step_budget = 60;
};

PlacementInstance gen_placement(std::uint64_t seed, const PlacementOptions& opts = {});
std::string placement_plan(const PlacementInstance& inst);

struct PlacementOutcome {
  bool located = false;
  bool placed = false;
  std::optional<PixelPoint> final_point;    // mask centroid, the scored point
  std::optional<PixelPoint> contact_point;  // bottom-centre of the mask
};

/// Locating: the first accepted focus is the target. Placement: the target's
/// location ends inside a ground-truth region, and locating succeeded.
PlacementOutcome evaluate_placement(const PlacementInstance& inst, const Scene2D& final_scene);

struct PlacementMetrics {
  int n = 0;
  double locating_rate = 0;
  double placement_rate = 0;
};
PlacementMetrics score_placement(const std::vector<PlacementOutcome>& outcomes);

/// Scenes with the target moved to `n - 1` random platform points and one
/// point inside the first region, in random order. Returns the index of the
/// correct candidate through `truth`.
std::vector<Scene2D> placement_candidates(const PlacementInstance& inst, int n, std::uint64_t seed,
                                          std::size_t* truth = nullptr);

// ---- multi-object QA -------------------------------------------------------

struct QaOptions {
  int width = 256;
  int height = 256;
  double absent_probability = 0.2;
};

struct QaInstance {
  std::uint64_t seed = 0;
  Image base;
  LabelMap labels;
  std::vector<ObjectInfo> objects;
  std::string question;
  std::string truth;               // shape name or "absent"
  std::optional<int> queried_id;   // object the question is about
  int step_budget = 20;
};

QaInstance gen_multiobject_qa(std::uint64_t seed, int n_objects, const QaOptions& opts = {});
std::string qa_plan(const QaInstance& inst);
bool grade_qa(std::string_view answer, std::string_view truth);

struct QaMetrics {
  int n = 0;
  double accuracy = 0;
};
QaMetrics score_qa(const std::vector<bool>& correct);

// ---- oracle policies -------------------------------------------------------

/// One move of a coarse-to-fine walk from `from` toward any point satisfying
/// `goal`, passing only through `allowed` points. Paths never reverse the
/// previous move of `target`, so the step stays constant along them; when no
/// point is reachable at the current step the walk reverses on purpose to
/// shrink it. Returns nullopt when `from` already meets the goal or nothing is
/// reachable even at the floor.
std::optional<Direction> plan_step(PixelPoint from, const StepSchedule& schedule, LayerId target, int width,
                                   int height, const std::function<bool(PixelPoint)>& goal,
                                   const std::function<bool(PixelPoint)>& allowed);

std::unique_ptr<Policy> counting_oracle(RunMode mode = RunMode::Full);
std::unique_ptr<Policy> jigsaw_oracle(const JigsawInstance& inst);
std::unique_ptr<Policy> placement_oracle(const PlacementInstance& inst);
std::unique_ptr<Policy> qa_oracle(const QaInstance& inst);
/// Picks the candidate whose target location lies in a ground-truth region.
std::unique_ptr<Policy> placement_comparator(const PlacementInstance& inst);

// ---- dataset adapters ------------------------------------------------------

struct ImportedCounting {
  std::string id;
  Image base;
  int true_count = 0;
};

/// `<dir>/scenes.json` in the CLEVR scene format plus `<dir>/images/*.png`.
/// Throws Error(MalformedDataset).
std::vector<ImportedCounting> import_clevr(const std::filesystem::path& dir);

/// `<dir>/questions.jsonl` lines {id, image, mask, question} with PNGs under
/// `<dir>/images` and `<dir>/masks`. Throws Error(MalformedDataset).
std::vector<PlacementInstance> import_where2place(const std::filesystem::path& dir);

// ---- instance bundles ------------------------------------------------------

using TaskInstance = std::variant<CountingInstance, JigsawInstance, PlacementInstance, QaInstance>;
TaskKind task_kind_of(const TaskInstance& inst);

/// Directory with instance.json plus PNGs. Overwrites existing files.
void save_instance(const std::filesystem::path& dir, const TaskInstance& inst);
/// Throws Error(MalformedDataset).
TaskInstance load_instance(const std::filesystem::path& dir);

// ---- episodes --------------------------------------------------------------

struct TaskEpisodeSetup {
  Scene2D scene;
  EpisodeConfig config;
  HooksFactory hooks;
};

/// Initial scene, plan, budgets and hooks for an instance.
TaskEpisodeSetup episode_setup(const TaskInstance& inst, RunMode mode);
/// Oracle policy for an instance.
std::unique_ptr<Policy> oracle_for(const TaskInstance& inst, RunMode mode);

/// Per-episode result; which fields are meaningful depends on the task.
struct EpisodeScore {
  bool correct = false;
  std::optional<int> predicted;  // counting
  int truth = 0;                 // counting
  int snapped = 0;               // jigsaw
  int missing = 0;               // jigsaw
  PlacementOutcome placement;    // placement
};
EpisodeScore score_episode(const TaskInstance& inst, const Episode& ep);

// ---- reference numbers -----------------------------------------------------

struct ReferenceRow {
  std::string task;
  std::string setting;
  std::string metric;
  double value = 0;
};
/// Published results of the full system with a GPT-4o policy, kept for
/// comparison only.
const std::vector<ReferenceRow>& reference_results();

}  // namespace imagine
