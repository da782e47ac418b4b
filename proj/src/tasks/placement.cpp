// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numbers>

#include "imagine/error.hpp"
#include "imagine/tasks.hpp"
#include "tasks/internal.hpp"

namespace imagine {

namespace {

struct Relation {
  const char* phrase;
  int dx;  // -1 left, +1 right
  int dy;  // -1 behind (above), +1 in front (below)
};

constexpr Relation kRelations[] = {
    {"to the left of", -1, 0}, {"to the right of", 1, 0}, {"behind", 0, -1}, {"in front of", 0, 1}};
constexpr int kRegionDepth = 40;
constexpr int kRegionGap = 6;

Mask relation_region(const Rect& anchor, const Relation& rel, const Mask& free_space) {
  Rect r = anchor;
  if (rel.dx < 0) r = {anchor.x0 - kRegionGap - kRegionDepth, anchor.y0, anchor.x0 - kRegionGap, anchor.y1};
  if (rel.dx > 0) r = {anchor.x1 + kRegionGap, anchor.y0, anchor.x1 + kRegionGap + kRegionDepth, anchor.y1};
  if (rel.dy < 0) r = {anchor.x0, anchor.y0 - kRegionGap - kRegionDepth, anchor.x1, anchor.y0 - kRegionGap};
  if (rel.dy > 0) r = {anchor.x0, anchor.y1 + kRegionGap, anchor.x1, anchor.y1 + kRegionGap + kRegionDepth};
  Mask m(free_space.width(), free_space.height());
  const Rect c = detail::clip_rect(r, m.width(), m.height());
  for (int y = c.y0; y <= c.y1; ++y) {
    for (int x = c.x0; x <= c.x1; ++x) m.set(x, y, free_space.at(x, y));
  }
  return m;
}

std::string describe(const ObjectInfo& o) { return o.color + " " + std::string(shape_name(o.shape)); }

bool in_regions(const PlacementInstance& inst, PixelPoint p) {
  if (!inst.platform.in_bounds(p.x, p.y)) return false;
  return std::any_of(inst.regions.begin(), inst.regions.end(), [&](const Mask& r) { return r.at(p.x, p.y); });
}

PixelPoint label_location(const LabelMap& labels, std::uint32_t id) {
  ObjectLayer l;
  const Mask region = labels.region(id);
  const Rect b = *mask_bbox(region);
  l.mask = region.crop(b);
  l.offset = {b.x0, b.y0};
  return l.location();
}

}  // namespace

PlacementInstance gen_placement(std::uint64_t seed, const PlacementOptions& opts) {
  if (opts.n_objects < 2) throw Error(ErrorCode::InvalidArgument, "n_objects must be at least 2");
  if (opts.width < 128 || opts.height < 128) throw Error(ErrorCode::InvalidArgument, "canvas too small");
  const auto& colors = palette();
  if (opts.n_objects > static_cast<int>(colors.size())) {
    throw Error(ErrorCode::InvalidArgument, "n_objects exceeds the number of distinct colors");
  }

  Rng rng(seed);
  const int w = opts.width;
  const int h = opts.height;
  for (int scene_try = 0; scene_try < 200; ++scene_try) {
    Image img = detail::textured_background(rng, w, h, {200, 196, 186, 255}, 8.0);
    const int floor_y = h * 2 / 5;
    for (int y = floor_y; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        Rgba c = img.at(x, y);
        for (int k = 0; k < 3; ++k) c[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(c[static_cast<std::size_t>(k)] * 0.7);
        img.set(x, y, c);
      }
    }
    const Rect table{w / 12 + rng.uniform_int(0, w / 16), h / 3 + rng.uniform_int(0, h / 16),
                     w - 1 - w / 12 - rng.uniform_int(0, w / 16), h - 1 - h / 10 - rng.uniform_int(0, h / 16)};
    Mask platform(w, h);
    for (int y = table.y0; y <= table.y1; ++y) {
      for (int x = table.x0; x <= table.x1; ++x) {
        platform.set(x, y, true);
        const bool edge = x - table.x0 < 3 || table.x1 - x < 3 || y - table.y0 < 3 || table.y1 - y < 3;
        img.set(x, y, edge ? Rgba{96, 62, 34, 255} : Rgba{150, 104, 62, 255});
      }
    }
    // Legs.
    for (int y = table.y1 + 1; y < h; ++y) {
      for (int x : {table.x0 + 6, table.x1 - 12}) {
        for (int dx = 0; dx < 6; ++dx) img.set(x + dx, y, {80, 52, 30, 255});
      }
    }

    LabelMap labels(w, h);
    std::vector<ObjectInfo> objects;
    std::vector<int> color_ids(colors.size());
    for (std::size_t i = 0; i < color_ids.size(); ++i) color_ids[i] = static_cast<int>(i);
    rng.shuffle(color_ids);
    std::vector<Mask> masks;
    for (int tries = 0; tries < 400 && static_cast<int>(objects.size()) < opts.n_objects; ++tries) {
      const auto shape = static_cast<ShapeKind>(rng.uniform_int(0, 2));
      const int size = rng.uniform_int(22, 30);
      const double cx = rng.uniform(table.x0 + size / 2.0 + 4, table.x1 - size / 2.0 - 4);
      const double cy = rng.uniform(table.y0 + size / 2.0 + 4, table.y1 - size / 2.0 - 4);
      Mask m = rasterize_shape(shape, cx, cy, size, rng.uniform(0, std::numbers::pi), w, h);
      const Rect b = *mask_bbox(m);
      bool clash = false;
      const Rect near = detail::clip_rect({b.x0 - 14, b.y0 - 14, b.x1 + 14, b.y1 + 14}, w, h);
      for (int y = near.y0; y <= near.y1 && !clash; ++y) {
        for (int x = near.x0; x <= near.x1; ++x) {
          if (labels.at(x, y) != 0) {
            clash = true;
            break;
          }
        }
      }
      if (clash) continue;
      const auto id = static_cast<std::uint32_t>(objects.size() + 1);
      for (int y = b.y0; y <= b.y1; ++y) {
        for (int x = b.x0; x <= b.x1; ++x) {
          if (m.at(x, y)) labels.set(x, y, id);
        }
      }
      const NamedColor& col = colors[static_cast<std::size_t>(color_ids[objects.size()])];
      detail::paint_object(img, m, col.rgba);
      ObjectInfo info;
      info.id = static_cast<int>(id);
      info.shape = shape;
      info.color = col.name;
      info.bbox = b;
      info.area = m.count();
      info.visible = info.area;
      objects.push_back(info);
      masks.push_back(std::move(m));
    }
    if (static_cast<int>(objects.size()) < opts.n_objects) continue;

    // Pick target, anchor and relation with a usable region.
    for (int pick = 0; pick < 40; ++pick) {
      const int t = rng.uniform_int(0, opts.n_objects - 1);
      int a = rng.uniform_int(0, opts.n_objects - 2);
      if (a >= t) ++a;
      const Relation& rel = kRelations[rng.uniform_int(0, 3)];
      Mask free_space = platform;
      for (int k = 0; k < opts.n_objects; ++k) {
        if (k == t) continue;
        const Mask halo = mask_dilate(masks[static_cast<std::size_t>(k)], 4);
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (halo.at(x, y)) free_space.set(x, y, false);
          }
        }
      }
      Mask region = relation_region(objects[static_cast<std::size_t>(a)].bbox, rel, free_space);
      if (static_cast<int>(region.count()) < opts.min_region_area) continue;
      const PixelPoint start = label_location(labels, static_cast<std::uint32_t>(t + 1));
      if (region.at(start.x, start.y)) continue;

      PlacementInstance inst;
      inst.seed = seed;
      inst.base = std::move(img);
      inst.labels = std::move(labels);
      inst.platform = std::move(platform);
      inst.regions.push_back(std::move(region));
      inst.target_id = t + 1;
      inst.anchor_id = a + 1;
      inst.relation = rel.phrase;
      inst.objects = std::move(objects);
      inst.prompt = "Move the " + describe(inst.objects[static_cast<std::size_t>(t)]) + " so that it is " +
                    rel.phrase + " the " + describe(inst.objects[static_cast<std::size_t>(a)]) + ".";
      return inst;
    }
  }
  throw Error(ErrorCode::PackingFailed, "could not lay out a placement scene");
}

std::string placement_plan(const PlacementInstance& inst) {
  return "Instruction: " + inst.prompt +
         "\n1. Move the cursor onto the object the instruction asks you to move, FOCUS, and ACCEPT its outline.\n"
         "2. Move the object to the requested spot. It cannot leave the table.\n"
         "3. RELEASE it, then ANSWER: done.";
}

PlacementOutcome evaluate_placement(const PlacementInstance& inst, const Scene2D& final_scene) {
  PlacementOutcome out;
  const ObjectLayer* first = nullptr;
  for (const auto& l : final_scene.layers) {
    if (!l.rect) {
      first = &l;
      break;
    }
  }
  if (!first) return out;
  out.final_point = first->location();
  for (int y = first->mask.height() - 1; y >= 0 && !out.contact_point; --y) {
    int lo = -1;
    int hi = -1;
    for (int x = 0; x < first->mask.width(); ++x) {
      if (!first->mask.at(x, y)) continue;
      if (lo < 0) lo = x;
      hi = x;
    }
    if (lo >= 0) out.contact_point = PixelPoint{first->offset.x + (lo + hi) / 2, first->offset.y + y};
  }
  out.located = inst.target_id == 0 || first->label == static_cast<std::uint32_t>(inst.target_id);
  out.placed = out.located && in_regions(inst, *out.final_point);
  return out;
}

PlacementMetrics score_placement(const std::vector<PlacementOutcome>& outcomes) {
  PlacementMetrics m;
  m.n = static_cast<int>(outcomes.size());
  if (m.n == 0) return m;
  int located = 0;
  int placed = 0;
  for (const auto& o : outcomes) {
    located += o.located;
    placed += o.placed;
  }
  m.locating_rate = static_cast<double>(located) / m.n;
  m.placement_rate = static_cast<double>(placed) / m.n;
  return m;
}

std::vector<Scene2D> placement_candidates(const PlacementInstance& inst, int n, std::uint64_t seed,
                                          std::size_t* truth) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "need at least one candidate");
  if (inst.target_id == 0 || inst.regions.empty()) {
    throw Error(ErrorCode::InvalidArgument, "candidates need a known target and region");
  }
  const auto target = static_cast<std::uint32_t>(inst.target_id);
  Scene2D scene = make_scene(inst.base, inst.labels, inst.platform);
  scene.cursor = label_location(inst.labels, target);
  if (inst.labels.at(scene.cursor.x, scene.cursor.y) != target) {
    const Mask r = inst.labels.region(target);
    const Rect b = *mask_bbox(r);
    for (int y = b.y0; y <= b.y1; ++y) {
      for (int x = b.x0; x <= b.x1; ++x) {
        if (r.at(x, y)) {
          scene.cursor = {x, y};
          y = b.y1;
          break;
        }
      }
    }
  }
  InstanceMapOracle oracle(inst.labels);
  scene = release_object(accept_focus(request_focus(scene, oracle).scene));
  const LayerId id = scene.layers.back().id;

  std::vector<PixelPoint> off_region;
  std::vector<PixelPoint> in_first;
  for (int y = 0; y < inst.platform.height(); ++y) {
    for (int x = 0; x < inst.platform.width(); ++x) {
      if (!inst.platform.at(x, y)) continue;
      if (inst.regions.front().at(x, y)) {
        in_first.push_back({x, y});
      } else if (!in_regions(inst, {x, y})) {
        off_region.push_back({x, y});
      }
    }
  }
  if (in_first.empty() || (n > 1 && off_region.empty())) {
    throw Error(ErrorCode::InvalidArgument, "platform leaves no room for candidates");
  }

  Rng rng(seed);
  std::vector<PixelPoint> points;
  points.push_back(in_first[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(in_first.size()) - 1))]);
  for (int i = 1; i < n; ++i) {
    points.push_back(off_region[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(off_region.size()) - 1))]);
  }
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<Scene2D> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    Scene2D c = scene;
    for (auto& l : c.layers) {
      if (l.id != id) continue;
      const PixelPoint at = l.location();
      const PixelPoint p = points[order[k]];
      l.offset.x += p.x - at.x;
      l.offset.y += p.y - at.y;
    }
    if (order[k] == 0 && truth) *truth = k;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace imagine
