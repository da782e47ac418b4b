// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/scene2d.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "imagine/error.hpp"

namespace imagine {

// ---- step schedule ---------------------------------------------------------

StepSchedule StepSchedule::for_canvas(int width, int height, double decay, int floor) {
  if (!(decay > 0.0 && decay <= 1.0)) throw Error(ErrorCode::InvalidArgument, "step decay must lie in (0, 1]");
  if (floor < 1) throw Error(ErrorCode::InvalidArgument, "step floor must be at least one pixel");
  StepSchedule s;
  s.initial = std::max(floor, std::min(width, height) / 8);
  s.current = s.initial;
  s.floor = floor;
  s.decay = decay;
  return s;
}

int StepSchedule::step_for(Direction dir, LayerId target) const {
  const bool reversal = last_direction && target == last_target && *last_direction == opposite(dir);
  if (!reversal) return current;
  return std::min(current, std::max(floor, static_cast<int>(std::floor(current * decay))));
}

StepSchedule StepSchedule::advanced(Direction dir, LayerId target) const {
  StepSchedule next = *this;
  next.current = step_for(dir, target);
  next.moves_taken += 1;
  next.last_direction = dir;
  next.last_target = target;
  return next;
}

// ---- layers ----------------------------------------------------------------

std::pair<double, double> ObjectLayer::centroid() const {
  double sx = 0;
  double sy = 0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      sx += x;
      sy += y;
      ++n;
    }
  }
  if (n == 0) return {static_cast<double>(offset.x), static_cast<double>(offset.y)};
  return {sx / static_cast<double>(n) + offset.x, sy / static_cast<double>(n) + offset.y};
}

PixelPoint ObjectLayer::location() const {
  const auto [cx, cy] = centroid();
  return {static_cast<int>(std::lround(cx)), static_cast<int>(std::lround(cy))};
}

Mask ObjectLayer::canvas_mask(int width, int height) const {
  Mask out(width, height);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) && out.in_bounds(x + offset.x, y + offset.y)) out.set(x + offset.x, y + offset.y, true);
    }
  }
  return out;
}

const ObjectLayer* Scene2D::find_layer(LayerId id) const {
  for (const auto& l : layers) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

namespace {

ObjectLayer& layer_ref(Scene2D& scene, LayerId id) {
  for (auto& l : scene.layers) {
    if (l.id == id) return l;
  }
  throw Error(ErrorCode::WrongFocus, "focused layer " + std::to_string(id) + " is missing");
}

const char* kind_name(FocusTarget::Kind k) {
  switch (k) {
    case FocusTarget::Kind::Cursor: return "cursor";
    case FocusTarget::Kind::Pending: return "pending object";
    case FocusTarget::Kind::Object: return "object";
  }
  return "?";
}

constexpr Rgba kContourColor{0, 255, 0, 255};
constexpr Rgba kMarkerColor{255, 255, 0, 255};

}  // namespace

void require_focus(const Scene2D& scene, FocusTarget::Kind kind, const char* op) {
  if (scene.focus.kind != kind) {
    throw Error(ErrorCode::WrongFocus, std::string(op) + " needs focus on the " + kind_name(kind) +
                                           ", current focus is the " + kind_name(scene.focus.kind));
  }
}

Scene2D make_scene(Image base, LabelMap labels, std::optional<Mask> region, const SceneOptions& opts) {
  if (base.empty()) throw Error(ErrorCode::InvalidArgument, "scene needs a base image");
  if (!labels.empty() && (labels.width() != base.width() || labels.height() != base.height())) {
    throw Error(ErrorCode::MaskShapeMismatch, "instance map does not match the base image");
  }
  if (region && (region->width() != base.width() || region->height() != base.height())) {
    throw Error(ErrorCode::MaskShapeMismatch, "region mask does not match the base image");
  }
  Scene2D s;
  s.step = StepSchedule::for_canvas(base.width(), base.height(), opts.step_decay, opts.step_floor);
  if (opts.step_initial) {
    s.step.initial = std::max(opts.step_floor, *opts.step_initial);
    s.step.current = s.step.initial;
  }
  s.cursor = {base.width() / 2, base.height() / 2};
  s.base = std::move(base);
  s.labels = std::move(labels);
  s.region_mask = std::move(region);
  s.options = opts;
  return s;
}

// ---- rendering -------------------------------------------------------------

Image render_clean(const Scene2D& scene) {
  Image out = scene.base;
  for (const auto& l : scene.layers) {
    if (l.visible) composite_over_inplace(out, l.image, l.mask, l.offset);
  }
  for (const auto& r : scene.markers) draw_rect_inplace(out, r, kMarkerColor, 2);
  return out;
}

Image render(const Scene2D& scene) {
  Image out = render_clean(scene);
  if (scene.focus.kind == FocusTarget::Kind::Cursor) draw_cursor_inplace(out, scene.cursor);
  return out;
}

LabelMap render_labels(const Scene2D& scene) {
  if (scene.labels.empty()) return {};
  LabelMap out = scene.labels;
  for (const auto& l : scene.layers) {
    if (!l.visible || l.rect) continue;
    for (int y = 0; y < l.mask.height(); ++y) {
      for (int x = 0; x < l.mask.width(); ++x) {
        if (l.mask.at(x, y) && out.in_bounds(x + l.offset.x, y + l.offset.y)) {
          out.set(x + l.offset.x, y + l.offset.y, l.label);
        }
      }
    }
  }
  return out;
}

Image render_preview(const Scene2D& scene) {
  require_focus(scene, FocusTarget::Kind::Pending, "preview");
  Image out = render_clean(scene);
  const ObjectLayer& c = scene.pending->candidate;
  draw_contour_inplace(out, c.mask, c.offset, kContourColor);
  return out;
}

Image render_focus_crop(const Scene2D& scene) {
  require_focus(scene, FocusTarget::Kind::Object, "focus crop");
  const ObjectLayer* l = scene.find_layer(scene.focus.id);
  if (!l) throw Error(ErrorCode::WrongFocus, "focused layer is missing");
  const Rect r{l->offset.x, l->offset.y, l->offset.x + l->mask.width() - 1, l->offset.y + l->mask.height() - 1};
  return render_clean(scene).crop(r);
}

Image render_view(const Scene2D& scene) {
  if (scene.focus.kind == FocusTarget::Kind::Pending) return render_preview(scene);
  if (scene.focus.kind == FocusTarget::Kind::Object) {
    const ObjectLayer* l = scene.find_layer(scene.focus.id);
    if (l && l->rect) return render_focus_crop(scene);
  }
  return render(scene);
}

// ---- operators -------------------------------------------------------------

Scene2D move_cursor(const Scene2D& scene, Direction dir) {
  require_focus(scene, FocusTarget::Kind::Cursor, "move_cursor");
  Scene2D next = scene;
  const int step = scene.step.step_for(dir, kCursorTarget);
  const PixelPoint d = direction_delta(dir);
  next.cursor.x = std::clamp(scene.cursor.x + d.x * step, 0, scene.width() - 1);
  next.cursor.y = std::clamp(scene.cursor.y + d.y * step, 0, scene.height() - 1);
  next.step = scene.step.advanced(dir, kCursorTarget);
  return next;
}

FocusRequestResult request_focus(const Scene2D& scene, SegmentationProvider& provider) {
  require_focus(scene, FocusTarget::Kind::Cursor, "request_focus");
  const Image frame = render_clean(scene);
  SegmentRequest req;
  req.mode = SegmentMode::SingleImage;
  req.frames = {frame};
  req.prompt = scene.cursor;
  SegmentResponse resp;
  try {
    resp = provider.segment(req);
  } catch (const Error& e) {
    throw Error(ErrorCode::SegmentationFailed, e.what());
  }
  const Mask& mask = resp.masks.front();
  const std::size_t area = mask.count();
  if (area == 0) throw Error(ErrorCode::SegmentationFailed, "provider returned an empty mask");

  Scene2D next = scene;
  PendingFocus pending;
  // An already lifted layer under the cursor is picked up again when the
  // returned mask mostly lies on it.
  for (auto it = scene.layers.rbegin(); it != scene.layers.rend(); ++it) {
    if (!it->visible || it->rect) continue;
    const int lx = scene.cursor.x - it->offset.x;
    const int ly = scene.cursor.y - it->offset.y;
    if (!it->mask.test(lx, ly)) continue;
    std::size_t overlap = 0;
    for (int y = 0; y < it->mask.height(); ++y) {
      for (int x = 0; x < it->mask.width(); ++x) {
        if (it->mask.at(x, y) && mask.test(x + it->offset.x, y + it->offset.y)) ++overlap;
      }
    }
    if (2 * overlap >= area) {
      pending.candidate = *it;
      pending.reselect = true;
    }
    break;
  }
  if (!pending.reselect) {
    const Rect box = *mask_bbox(mask);
    ObjectLayer& c = pending.candidate;
    c.id = scene.next_id;
    c.image = frame.crop(box);
    c.mask = mask.crop(box);
    c.offset = {box.x0, box.y0};
    c.origin = c.offset;
    const LabelMap labels = render_labels(scene);
    if (!labels.empty()) {
      std::map<std::uint32_t, std::size_t> votes;
      for (int y = box.y0; y <= box.y1; ++y) {
        for (int x = box.x0; x <= box.x1; ++x) {
          if (mask.at(x, y) && labels.at(x, y) != 0) ++votes[labels.at(x, y)];
        }
      }
      std::size_t best = 0;
      for (const auto& [id, n] : votes) {
        if (n > best) {
          best = n;
          c.label = id;
        }
      }
    }
    next.next_id += 1;
  }
  next.focus = FocusTarget::pending(pending.candidate.id);
  next.pending = std::move(pending);
  Image preview = render_preview(next);
  return {std::move(next), std::move(preview), resp.confidence};
}

Scene2D accept_focus(const Scene2D& scene) {
  require_focus(scene, FocusTarget::Kind::Pending, "accept_focus");
  Scene2D next = scene;
  PendingFocus pending = *next.pending;
  next.pending.reset();
  next.focus = FocusTarget::object(pending.candidate.id);
  if (pending.reselect) return next;

  const Mask hole = mask_dilate(pending.candidate.canvas_mask(scene.width(), scene.height()), scene.options.dilation);
  next.base = inpaint_diffusion(scene.base, hole, scene.options.inpaint);
  if (!next.labels.empty()) {
    for (int y = 0; y < hole.height(); ++y) {
      for (int x = 0; x < hole.width(); ++x) {
        if (hole.at(x, y)) next.labels.set(x, y, 0);
      }
    }
  }
  next.layers.push_back(std::move(pending.candidate));
  return next;
}

Scene2D reject_focus(const Scene2D& scene) {
  require_focus(scene, FocusTarget::Kind::Pending, "reject_focus");
  Scene2D next = scene;
  next.pending.reset();
  next.focus = FocusTarget::cursor();
  return next;
}

Scene2D ignore(const Scene2D& scene) {
  require_focus(scene, FocusTarget::Kind::Object, "ignore");
  Scene2D next = scene;
  layer_ref(next, scene.focus.id).visible = false;
  next.focus = FocusTarget::cursor();
  return next;
}

MoveResult move_object(const Scene2D& scene, Direction dir) {
  require_focus(scene, FocusTarget::Kind::Object, "move_object");
  const LayerId id = scene.focus.id;
  const ObjectLayer* layer = scene.find_layer(id);
  if (!layer) throw Error(ErrorCode::WrongFocus, "focused layer is missing");
  const int step = scene.step.step_for(dir, id);
  const PixelPoint d = direction_delta(dir);
  PixelPoint point = layer->location();
  point.x += d.x * step;
  point.y += d.y * step;
  const bool outside_canvas = point.x < 0 || point.y < 0 || point.x >= scene.width() || point.y >= scene.height();
  const bool outside_region = !outside_canvas && scene.region_mask && !scene.region_mask->at(point.x, point.y);
  if (outside_canvas || outside_region) return {scene, true};

  Scene2D next = scene;
  ObjectLayer& l = layer_ref(next, id);
  l.offset.x += d.x * step;
  l.offset.y += d.y * step;
  next.step = scene.step.advanced(dir, id);
  return {std::move(next), false};
}

Scene2D release_object(const Scene2D& scene) {
  require_focus(scene, FocusTarget::Kind::Object, "release_object");
  Scene2D next = scene;
  next.focus = FocusTarget::cursor();
  return next;
}

Scene2D focus_rect(const Scene2D& scene, PixelPoint top_left, PixelPoint bottom_right) {
  require_focus(scene, FocusTarget::Kind::Cursor, "focus_rect");
  const Rect r{std::max(top_left.x, 0), std::max(top_left.y, 0), std::min(bottom_right.x, scene.width()) - 1,
               std::min(bottom_right.y, scene.height()) - 1};
  if (bottom_right.x <= top_left.x || bottom_right.y <= top_left.y || r.width() < 1 || r.height() < 1) {
    throw Error(ErrorCode::DegenerateRect, "rectangle has zero area inside the canvas");
  }
  Scene2D next = scene;
  ObjectLayer l;
  l.id = scene.next_id;
  l.image = render_clean(scene).crop(r);
  l.mask = Mask(r.width(), r.height(), true);
  l.offset = {r.x0, r.y0};
  l.origin = l.offset;
  l.rect = true;
  next.layers.push_back(std::move(l));
  next.next_id += 1;
  next.focus = FocusTarget::object(scene.next_id);
  return next;
}

Scene2D draw_marker(const Scene2D& scene) {
  require_focus(scene, FocusTarget::Kind::Cursor, "draw_marker");
  Scene2D next = scene;
  const int h = kMarkerSize / 2;
  next.markers.push_back({scene.cursor.x - h, scene.cursor.y - h, scene.cursor.x + h, scene.cursor.y + h});
  return next;
}

}  // namespace imagine
