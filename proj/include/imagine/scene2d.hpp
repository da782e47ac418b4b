// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "imagine/direction.hpp"
#include "imagine/image.hpp"
#include "imagine/segmenter.hpp"

namespace imagine {

using LayerId = int;
inline constexpr LayerId kCursorTarget = 0;

/// Coarse-to-fine movement step. A move that reverses the previous move of
/// the same focus target first multiplies the step by `decay`; the step never
/// drops below `floor` and never grows.
struct StepSchedule {
  int initial = 32;
  int current = 32;
  int floor = 2;
  double decay = 0.5;
  int moves_taken = 0;
  std::optional<Direction> last_direction;
  LayerId last_target = kCursorTarget;

  static StepSchedule for_canvas(int width, int height, double decay = 0.5, int floor = 2);

  /// Step that a move in `dir` on `target` would use.
  int step_for(Direction dir, LayerId target) const;
  StepSchedule advanced(Direction dir, LayerId target) const;

  friend bool operator==(const StepSchedule&, const StepSchedule&) = default;
};

struct ObjectLayer {
  LayerId id = 0;
  Image image;  // cropped to the mask's bounding box
  Mask mask;
  PixelPoint offset;  // canvas position of image(0,0)
  PixelPoint origin;  // offset when the layer was created
  bool visible = true;
  std::uint32_t label = 0;  // instance id under the layer at creation, 0 if unknown
  bool rect = false;        // created by focus_rect rather than segmentation

  /// Mask centroid in canvas coordinates.
  std::pair<double, double> centroid() const;
  /// Rounded centroid: the single point tasks use as the object's location.
  PixelPoint location() const;
  Mask canvas_mask(int width, int height) const;

  friend bool operator==(const ObjectLayer&, const ObjectLayer&) = default;
};

struct FocusTarget {
  enum class Kind { Cursor, Pending, Object };
  Kind kind = Kind::Cursor;
  LayerId id = kCursorTarget;

  static FocusTarget cursor() { return {}; }
  static FocusTarget pending(LayerId id) { return {Kind::Pending, id}; }
  static FocusTarget object(LayerId id) { return {Kind::Object, id}; }

  friend bool operator==(const FocusTarget&, const FocusTarget&) = default;
};

struct PendingFocus {
  ObjectLayer candidate;
  bool reselect = false;  // candidate is an existing layer picked up again

  friend bool operator==(const PendingFocus&, const PendingFocus&) = default;
};

struct SceneOptions {
  double step_decay = 0.5;
  int step_floor = 2;
  std::optional<int> step_initial;  // default: min(W, H) / 8
  int dilation = 2;                 // halo removed around lifted objects
  InpaintOptions inpaint;

  friend bool operator==(const SceneOptions&, const SceneOptions&) = default;
};

/// The layered 2D imagination space. Values are immutable snapshots: every
/// operation below returns a new scene and leaves its input untouched.
struct Scene2D {
  Image base;
  LabelMap labels;  // instance ids of the base layer; empty when unknown
  std::vector<ObjectLayer> layers;
  PixelPoint cursor;
  FocusTarget focus;
  std::optional<PendingFocus> pending;
  std::optional<Mask> region_mask;
  StepSchedule step;
  std::vector<Rect> markers;  // permanent boxes drawn by the cursor-with-boxes baseline
  LayerId next_id = 1;
  SceneOptions options;

  int width() const { return base.width(); }
  int height() const { return base.height(); }
  const ObjectLayer* find_layer(LayerId id) const;

  friend bool operator==(const Scene2D&, const Scene2D&) = default;
};

/// Cursor at the canvas centre, focused.
Scene2D make_scene(Image base, LabelMap labels = {}, std::optional<Mask> region = std::nullopt,
                   const SceneOptions& opts = {});

// ---- rendering -------------------------------------------------------------

/// Base plus visible layers in insertion order, markers, and the cursor glyph
/// iff the cursor is focused.
Image render(const Scene2D& scene);
/// Same as render() but never draws the cursor; used as segmentation input.
Image render_clean(const Scene2D& scene);
/// Current instance ids as seen in render(): base labels overdrawn by visible
/// layers. Empty when the scene carries no labels.
LabelMap render_labels(const Scene2D& scene);
/// Candidate preview: clean render with the pending mask outlined.
Image render_preview(const Scene2D& scene);
/// Crop of the focused rectangle layer.
Image render_focus_crop(const Scene2D& scene);
/// What the policy sees: preview while verifying, the crop while a rectangle
/// is focused, render() otherwise.
Image render_view(const Scene2D& scene);

// ---- operators -------------------------------------------------------------

Scene2D move_cursor(const Scene2D& scene, Direction dir);

struct FocusRequestResult {
  Scene2D scene;
  Image preview;
  std::optional<double> confidence;
};

/// Provider errors and empty masks raise Error(SegmentationFailed).
FocusRequestResult request_focus(const Scene2D& scene, SegmentationProvider& provider);
Scene2D accept_focus(const Scene2D& scene);
Scene2D reject_focus(const Scene2D& scene);
Scene2D ignore(const Scene2D& scene);

struct MoveResult {
  Scene2D scene;
  bool refused = false;
};
MoveResult move_object(const Scene2D& scene, Direction dir);
Scene2D release_object(const Scene2D& scene);

/// Half-open rectangle [top_left, bottom_right) becomes the focused layer.
Scene2D focus_rect(const Scene2D& scene, PixelPoint top_left, PixelPoint bottom_right);

inline constexpr int kMarkerSize = 21;
/// Permanent box centred on the cursor.
Scene2D draw_marker(const Scene2D& scene);

/// Throws Error(WrongFocus) unless the focus has the given kind.
void require_focus(const Scene2D& scene, FocusTarget::Kind kind, const char* op);

// ---- scene descriptor ------------------------------------------------------

struct ObjectAnnotation {
  int id = 0;
  std::string mask;  // path of a ground-truth mask PNG, relative to the descriptor
  std::string label;

  friend bool operator==(const ObjectAnnotation&, const ObjectAnnotation&) = default;
};

struct SceneDescriptor {
  int width = 0;
  int height = 0;
  std::string base_image;
  std::optional<std::string> instance_map;
  std::optional<std::string> region_mask;
  std::vector<ObjectAnnotation> objects;

  friend bool operator==(const SceneDescriptor&, const SceneDescriptor&) = default;
};

std::string to_json(const SceneDescriptor& d);
SceneDescriptor scene_descriptor_from_json(const std::string& text);
/// Resolves paths relative to `root` and builds the initial scene.
Scene2D load_scene(const SceneDescriptor& d, const std::filesystem::path& root, const SceneOptions& opts = {});

}  // namespace imagine
