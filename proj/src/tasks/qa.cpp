// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <numbers>
#include <set>

#include "imagine/error.hpp"
#include "imagine/tasks.hpp"
#include "tasks/internal.hpp"

namespace imagine {

namespace {

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Canonical answer word a token stands for, or "" when it names nothing.
std::string canonical(const std::string& token) {
  for (ShapeKind s : {ShapeKind::Circle, ShapeKind::Square, ShapeKind::Star}) {
    const std::string name(shape_name(s));
    if (token == name || token == name + "s") return name;
  }
  if (token == "absent" || token == "none" || token == "missing") return "absent";
  return "";
}

}  // namespace

QaInstance gen_multiobject_qa(std::uint64_t seed, int n_objects, const QaOptions& opts) {
  const auto& colors = palette();
  if (n_objects < 2 || n_objects > static_cast<int>(colors.size()) - 1) {
    throw Error(ErrorCode::InvalidArgument, "n_objects must be in [2, " + std::to_string(colors.size() - 1) + "]");
  }
  Rng rng(seed);
  const int w = opts.width;
  const int h = opts.height;
  QaInstance inst;
  inst.seed = seed;
  inst.base = detail::textured_background(rng, w, h, {182, 182, 176, 255}, 12.0);
  inst.labels = LabelMap(w, h);

  std::vector<int> color_ids(colors.size());
  for (std::size_t i = 0; i < color_ids.size(); ++i) color_ids[i] = static_cast<int>(i);
  rng.shuffle(color_ids);

  for (int tries = 0; static_cast<int>(inst.objects.size()) < n_objects; ++tries) {
    if (tries > 2000) throw Error(ErrorCode::PackingFailed, "could not place QA objects");
    const auto shape = static_cast<ShapeKind>(rng.uniform_int(0, 2));
    const int size = rng.uniform_int(20, 34);
    const double cx = rng.uniform(size / 2.0 + 2, w - size / 2.0 - 3);
    const double cy = rng.uniform(size / 2.0 + 2, h - size / 2.0 - 3);
    const Mask m = rasterize_shape(shape, cx, cy, size, rng.uniform(0, std::numbers::pi), w, h);
    const Rect b = *mask_bbox(m);
    const Rect near = detail::clip_rect({b.x0 - 6, b.y0 - 6, b.x1 + 6, b.y1 + 6}, w, h);
    bool clash = false;
    for (int y = near.y0; y <= near.y1 && !clash; ++y) {
      for (int x = near.x0; x <= near.x1; ++x) {
        if (inst.labels.at(x, y) != 0) {
          clash = true;
          break;
        }
      }
    }
    if (clash) continue;
    const auto id = static_cast<std::uint32_t>(inst.objects.size() + 1);
    for (int y = b.y0; y <= b.y1; ++y) {
      for (int x = b.x0; x <= b.x1; ++x) {
        if (m.at(x, y)) inst.labels.set(x, y, id);
      }
    }
    const NamedColor& col = colors[static_cast<std::size_t>(color_ids[inst.objects.size()])];
    detail::paint_object(inst.base, m, col.rgba);
    ObjectInfo info;
    info.id = static_cast<int>(id);
    info.shape = shape;
    info.color = col.name;
    info.bbox = b;
    info.area = m.count();
    info.visible = info.area;
    inst.objects.push_back(info);
  }

  std::string color;
  if (rng.uniform() < opts.absent_probability) {
    color = colors[static_cast<std::size_t>(color_ids[static_cast<std::size_t>(n_objects)])].name;
    inst.truth = "absent";
  } else {
    const ObjectInfo& q = inst.objects[static_cast<std::size_t>(rng.uniform_int(0, n_objects - 1))];
    color = q.color;
    inst.truth = std::string(shape_name(q.shape));
    inst.queried_id = q.id;
  }
  inst.question = "What shape is the " + color + " object?";
  return inst;
}

std::string qa_plan(const QaInstance& inst) {
  return "Question: " + inst.question +
         "\nLook for the object. You may use RECT to zoom into a region first.\n"
         "ANSWER with one word: circle, square, star, or absent if there is no such object.";
}

bool grade_qa(std::string_view answer, std::string_view truth) {
  const std::string want(truth);
  bool hit = false;
  for (const auto& t : words(answer)) {
    const std::string c = canonical(t);
    if (c.empty()) continue;
    if (c != want) return false;
    hit = true;
  }
  return hit;
}

QaMetrics score_qa(const std::vector<bool>& correct) {
  QaMetrics m;
  m.n = static_cast<int>(correct.size());
  if (m.n > 0) m.accuracy = static_cast<double>(std::count(correct.begin(), correct.end(), true)) / m.n;
  return m;
}

}  // namespace imagine
