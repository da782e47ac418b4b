// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "imagine/error.hpp"
#include "imagine/tasks.hpp"
#include "tasks/internal.hpp"

namespace imagine {

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw Error(ErrorCode::InvalidArgument, "empty integer range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next() % span);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::string_view task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::Counting: return "counting";
    case TaskKind::Jigsaw: return "jigsaw";
    case TaskKind::Placement: return "placement";
    case TaskKind::QA: return "qa";
  }
  return "?";
}

std::optional<TaskKind> task_kind_from_name(std::string_view name) {
  for (TaskKind k : {TaskKind::Counting, TaskKind::Jigsaw, TaskKind::Placement, TaskKind::QA}) {
    if (task_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view shape_name(ShapeKind s) {
  switch (s) {
    case ShapeKind::Circle: return "circle";
    case ShapeKind::Square: return "square";
    case ShapeKind::Star: return "star";
  }
  return "?";
}

const std::vector<NamedColor>& palette() {
  static const std::vector<NamedColor> colors = {
      {"red", {220, 50, 50, 255}},     {"green", {50, 170, 70, 255}},   {"blue", {50, 90, 220, 255}},
      {"yellow", {235, 200, 40, 255}}, {"purple", {150, 70, 190, 255}}, {"orange", {240, 130, 30, 255}},
      {"cyan", {40, 190, 200, 255}},   {"pink", {240, 120, 180, 255}},
  };
  return colors;
}

Mask rasterize_shape(ShapeKind shape, double cx, double cy, double size, double rotation, int width, int height) {
  Mask m(width, height);
  const double r = size / 2.0;
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);

  std::array<std::pair<double, double>, 10> star{};
  for (int k = 0; k < 10; ++k) {
    const double rad = (k % 2 == 0) ? r : 0.45 * r;
    const double a = -std::numbers::pi / 2 + k * std::numbers::pi / 5;
    star[static_cast<std::size_t>(k)] = {rad * std::cos(a), rad * std::sin(a)};
  }
  auto in_star = [&](double u, double v) {
    bool inside = false;
    for (std::size_t i = 0, j = star.size() - 1; i < star.size(); j = i++) {
      const auto [xi, yi] = star[i];
      const auto [xj, yj] = star[j];
      if ((yi > v) != (yj > v) && u < (xj - xi) * (v - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
  };

  const int x0 = std::max(0, static_cast<int>(std::floor(cx - r - 1)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + r + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - r - 1)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(cy + r + 1)));
  const double half_side = r / std::numbers::sqrt2;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double u = c * dx + s * dy;
      const double v = -s * dx + c * dy;
      bool in = false;
      switch (shape) {
        case ShapeKind::Circle: in = dx * dx + dy * dy <= r * r; break;
        case ShapeKind::Square: in = std::abs(u) <= half_side && std::abs(v) <= half_side; break;
        case ShapeKind::Star: in = in_star(u, v); break;
      }
      if (in) m.set(x, y, true);
    }
  }
  return m;
}

namespace detail {

Image textured_background(Rng& rng, int width, int height, Rgba tone, double amplitude) {
  Image img(width, height);
  const double fx = rng.uniform(0.02, 0.08);
  const double fy = rng.uniform(0.02, 0.08);
  const double px = rng.uniform(0, 2 * std::numbers::pi);
  const double py = rng.uniform(0, 2 * std::numbers::pi);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double wave = amplitude * 0.5 * (std::sin(fx * x + px) + std::sin(fy * y + py));
      const double grain = rng.uniform(-3.0, 3.0);
      Rgba c = tone;
      for (int k = 0; k < 3; ++k) {
        c[static_cast<std::size_t>(k)] =
            static_cast<std::uint8_t>(std::clamp(tone[static_cast<std::size_t>(k)] + wave + grain, 0.0, 255.0));
      }
      img.set(x, y, c);
    }
  }
  return img;
}

void paint_object(Image& img, const Mask& mask, Rgba color) {
  const Rgba edge = {static_cast<std::uint8_t>(color[0] * 0.55), static_cast<std::uint8_t>(color[1] * 0.55),
                     static_cast<std::uint8_t>(color[2] * 0.55), 255};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const bool border = !mask.test(x - 1, y) || !mask.test(x + 1, y) || !mask.test(x, y - 1) || !mask.test(x, y + 1);
      img.set(x, y, border ? edge : color);
    }
  }
}

bool single_component(const LabelMap& labels, std::uint32_t id, const Rect& window) {
  std::vector<PixelPoint> stack;
  std::size_t total = 0;
  for (int y = window.y0; y <= window.y1; ++y) {
    for (int x = window.x0; x <= window.x1; ++x) {
      if (labels.at(x, y) != id) continue;
      ++total;
      if (stack.empty() && total == 1) stack.push_back({x, y});
    }
  }
  if (total == 0) return false;
  Mask seen(labels.width(), labels.height());
  seen.set(stack[0].x, stack[0].y, true);
  std::size_t reached = 0;
  while (!stack.empty()) {
    const PixelPoint p = stack.back();
    stack.pop_back();
    ++reached;
    for (const PixelPoint d : {PixelPoint{1, 0}, PixelPoint{-1, 0}, PixelPoint{0, 1}, PixelPoint{0, -1}}) {
      const int nx = p.x + d.x;
      const int ny = p.y + d.y;
      if (!labels.in_bounds(nx, ny) || seen.at(nx, ny) || labels.at(nx, ny) != id) continue;
      seen.set(nx, ny, true);
      stack.push_back({nx, ny});
    }
  }
  return reached == total;
}

std::size_t core_pixels(const LabelMap& labels, std::uint32_t id, const Rect& window, int margin) {
  std::size_t n = 0;
  for (int y = window.y0; y <= window.y1; ++y) {
    for (int x = window.x0; x <= window.x1; ++x) {
      if (labels.at(x, y) != id) continue;
      bool clear = true;
      for (int dy = -margin; dy <= margin && clear; ++dy) {
        for (int dx = -margin; dx <= margin; ++dx) {
          if (!labels.in_bounds(x + dx, y + dy)) continue;
          const std::uint32_t v = labels.at(x + dx, y + dy);
          if (v != 0 && v != id) {
            clear = false;
            break;
          }
        }
      }
      n += clear;
    }
  }
  return n;
}

std::size_t count_label(const LabelMap& labels, std::uint32_t id, const Rect& window) {
  std::size_t n = 0;
  for (int y = window.y0; y <= window.y1; ++y) {
    for (int x = window.x0; x <= window.x1; ++x) n += labels.at(x, y) == id;
  }
  return n;
}

Rect clip_rect(const Rect& r, int width, int height) {
  return {std::max(0, r.x0), std::max(0, r.y0), std::min(width - 1, r.x1), std::min(height - 1, r.y1)};
}

std::optional<Rect> label_bbox(const LabelMap& labels, std::uint32_t id) { return mask_bbox(labels.region(id)); }

}  // namespace detail

}  // namespace imagine
