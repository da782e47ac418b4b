// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "imagine/error.hpp"
#include "imagine/tasks.hpp"
#include "tasks/internal.hpp"

namespace imagine {

namespace {

constexpr int kCoreMargin = 3;

struct Placed {
  ShapeKind shape;
  std::size_t color;
  Mask mask;
  Rect bbox;  // full shape
};

Rect grow(const Rect& r, int by) { return {r.x0 - by, r.y0 - by, r.x1 + by, r.y1 + by}; }

}  // namespace

CountingInstance gen_counting(std::uint64_t seed, int n, const CountingOptions& opts) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "n must be non-negative");
  if (opts.width < 32 || opts.height < 32) throw Error(ErrorCode::InvalidArgument, "canvas too small");
  if (opts.min_size < 6 || opts.max_size < opts.min_size) throw Error(ErrorCode::InvalidArgument, "bad size range");

  Rng rng(seed);
  const int w = opts.width;
  const int h = opts.height;
  const Rgba tone = {static_cast<std::uint8_t>(rng.uniform_int(150, 200)),
                     static_cast<std::uint8_t>(rng.uniform_int(150, 200)),
                     static_cast<std::uint8_t>(rng.uniform_int(140, 190)), 255};
  const Image background = detail::textured_background(rng, w, h, tone, 14.0);

  LabelMap labels(w, h);
  std::vector<Placed> placed;
  int attempts = 0;
  const auto& colors = palette();

  while (static_cast<int>(placed.size()) < n) {
    if (++attempts > opts.max_attempts) {
      throw Error(ErrorCode::PackingFailed, "could not fit " + std::to_string(n) + " objects after " +
                                                std::to_string(opts.max_attempts) + " attempts");
    }
    const auto shape = static_cast<ShapeKind>(rng.uniform_int(0, 2));
    const int size = rng.uniform_int(opts.min_size, opts.max_size);
    const double rot = rng.uniform(0, std::numbers::pi);
    const double half = size / 2.0 + 1;
    const double cx = rng.uniform(half, w - 1 - half);
    const double cy = rng.uniform(half, h - 1 - half);
    const bool may_overlap = rng.uniform() < opts.overlap_probability;
    const std::size_t color = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(colors.size()) - 1));

    Mask m = rasterize_shape(shape, cx, cy, size, rot, w, h);
    const auto bb = mask_bbox(m);
    if (!bb) continue;
    const auto id = static_cast<std::uint32_t>(placed.size() + 1);

    const Rect near = detail::clip_rect(grow(*bb, kCoreMargin), w, h);
    std::set<std::uint32_t> neighbours;
    for (int y = near.y0; y <= near.y1; ++y) {
      for (int x = near.x0; x <= near.x1; ++x) {
        if (labels.at(x, y) != 0) neighbours.insert(labels.at(x, y));
      }
    }
    if (!may_overlap && !neighbours.empty()) {
      // Keep clear of others unless overlap was drawn; checked exactly below.
      bool touches = false;
      for (int y = bb->y0; y <= bb->y1 && !touches; ++y) {
        for (int x = bb->x0; x <= bb->x1 && !touches; ++x) {
          if (!m.at(x, y)) continue;
          for (int dy = -kCoreMargin; dy <= kCoreMargin && !touches; ++dy) {
            for (int dx = -kCoreMargin; dx <= kCoreMargin; ++dx) {
              if (labels.in_bounds(x + dx, y + dy) && labels.at(x + dx, y + dy) != 0) {
                touches = true;
                break;
              }
            }
          }
        }
      }
      if (touches) continue;
    }

    LabelMap trial = labels;
    for (int y = bb->y0; y <= bb->y1; ++y) {
      for (int x = bb->x0; x <= bb->x1; ++x) {
        if (m.at(x, y)) trial.set(x, y, id);
      }
    }

    auto acceptable = [&](std::uint32_t k, const Mask& shape_mask, const Rect& box) {
      const std::size_t area = shape_mask.count();
      const std::size_t visible = detail::count_label(trial, k, box);
      if (static_cast<double>(visible) < opts.min_visible * static_cast<double>(area)) return false;
      if (detail::core_pixels(trial, k, box, kCoreMargin) < static_cast<std::size_t>(opts.min_core)) return false;
      return detail::single_component(trial, k, box);
    };
    bool ok = acceptable(id, m, *bb);
    for (std::uint32_t k : neighbours) {
      if (!ok) break;
      const Placed& p = placed[k - 1];
      ok = acceptable(k, p.mask, p.bbox);
    }
    if (!ok) continue;
    labels = std::move(trial);
    placed.push_back({shape, color, std::move(m), *bb});
  }

  CountingInstance inst;
  inst.seed = seed;
  inst.n = n;
  inst.reference = background;
  inst.base = background;
  for (const Placed& p : placed) detail::paint_object(inst.base, p.mask, colors[p.color].rgba);
  inst.labels = labels;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const auto id = static_cast<std::uint32_t>(i + 1);
    ObjectInfo info;
    info.id = static_cast<int>(id);
    info.shape = placed[i].shape;
    info.color = colors[placed[i].color].name;
    info.area = placed[i].mask.count();
    info.visible = detail::count_label(labels, id, placed[i].bbox);
    info.bbox = detail::label_bbox(labels, id).value_or(Rect{});
    inst.objects.push_back(std::move(info));
  }
  return inst;
}

std::string counting_plan() {
  return "Count the objects in the image one at a time.\n"
         "1. Move the cursor onto an object you have not counted yet.\n"
         "2. FOCUS to outline it. ACCEPT if the outline covers exactly one object, otherwise REJECT and move on.\n"
         "3. IGNORE the accepted object. It disappears and counts as one.\n"
         "4. When no objects are left, ANSWER with the number of objects you removed.";
}

std::optional<int> parse_count(std::string_view answer) {
  static const std::map<std::string, int> kWords = {
      {"zero", 0},      {"none", 0},      {"one", 1},        {"two", 2},       {"three", 3},    {"four", 4},
      {"five", 5},      {"six", 6},       {"seven", 7},      {"eight", 8},     {"nine", 9},     {"ten", 10},
      {"eleven", 11},   {"twelve", 12},   {"thirteen", 13},  {"fourteen", 14}, {"fifteen", 15}, {"sixteen", 16},
      {"seventeen", 17}, {"eighteen", 18}, {"nineteen", 19}, {"twenty", 20},   {"thirty", 30},  {"forty", 40},
      {"fifty", 50},
  };
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : answer) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      if (t.size() > 6) return std::nullopt;
      return std::stoi(t);
    }
    const auto it = kWords.find(t);
    if (it == kWords.end()) continue;
    int v = it->second;
    if (v >= 20 && v % 10 == 0 && i + 1 < tokens.size()) {
      const auto unit = kWords.find(tokens[i + 1]);
      if (unit != kWords.end() && unit->second >= 1 && unit->second <= 9) v += unit->second;
    }
    return v;
  }
  return std::nullopt;
}

CountingMetrics score_counting(const std::vector<std::optional<int>>& predictions, const std::vector<int>& truths) {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorCode::InvalidArgument, "predictions and truths differ in length");
  }
  CountingMetrics m;
  m.n = static_cast<int>(truths.size());
  if (m.n == 0) return m;
  std::vector<double> errors;
  int hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const double e = predictions[i] ? std::abs(*predictions[i] - truths[i]) : std::abs(truths[i]);
    hits += predictions[i] && *predictions[i] == truths[i];
    errors.push_back(e);
  }
  double sum = 0;
  for (double e : errors) sum += e;
  m.mean_error = sum / m.n;
  double var = 0;
  for (double e : errors) var += (e - m.mean_error) * (e - m.mean_error);
  m.variance = var / m.n;
  m.success_rate = static_cast<double>(hits) / m.n;
  return m;
}

}  // namespace imagine
