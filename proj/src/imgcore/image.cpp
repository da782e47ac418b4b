// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/image.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "imagine/error.hpp"

namespace imagine {

namespace {

void require_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "raster dimensions must be positive");
  }
}

Rect clip_rect(const Rect& r, int width, int height) {
  return Rect{std::max(r.x0, 0), std::max(r.y0, 0), std::min(r.x1, width - 1), std::min(r.y1, height - 1)};
}

}  // namespace

Image::Image(int width, int height, Rgba fill) : width_(width), height_(height) {
  require_dims(width, height);
  data_.resize(static_cast<std::size_t>(width) * height * 4);
  for (std::size_t i = 0; i < data_.size(); i += 4) {
    std::copy(fill.begin(), fill.end(), data_.begin() + static_cast<std::ptrdiff_t>(i));
  }
}

Rgba Image::at(int x, int y) const {
  const auto* p = pixel(x, y);
  return {p[0], p[1], p[2], p[3]};
}

void Image::set(int x, int y, Rgba c) {
  auto* p = pixel(x, y);
  std::copy(c.begin(), c.end(), p);
}

Image Image::crop(const Rect& r) const {
  const Rect c = clip_rect(r, width_, height_);
  if (c.width() < 1 || c.height() < 1) {
    throw Error(ErrorCode::InvalidArgument, "crop rectangle does not intersect the image");
  }
  Image out(c.width(), c.height());
  for (int y = c.y0; y <= c.y1; ++y) {
    std::copy_n(pixel(c.x0, y), static_cast<std::size_t>(c.width()) * 4, out.pixel(0, y - c.y0));
  }
  return out;
}

Mask::Mask(int width, int height, bool fill) : width_(width), height_(height) {
  require_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

Mask Mask::crop(const Rect& r) const {
  const Rect c = clip_rect(r, width_, height_);
  if (c.width() < 1 || c.height() < 1) {
    throw Error(ErrorCode::InvalidArgument, "crop rectangle does not intersect the mask");
  }
  Mask out(c.width(), c.height());
  for (int y = c.y0; y <= c.y1; ++y) {
    for (int x = c.x0; x <= c.x1; ++x) out.set(x - c.x0, y - c.y0, at(x, y));
  }
  return out;
}

LabelMap::LabelMap(int width, int height, std::uint32_t fill) : width_(width), height_(height) {
  require_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Mask LabelMap::region(std::uint32_t id) const {
  Mask m(width_, height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (at(x, y) == id) m.set(x, y, true);
    }
  }
  return m;
}

// ---- compositing -----------------------------------------------------------

void composite_over_inplace(Image& dst, const Image& src, const Mask& mask, PixelPoint offset) {
  if (src.width() != mask.width() || src.height() != mask.height()) {
    throw Error(ErrorCode::MaskShapeMismatch, "composite source and mask differ in size");
  }
  const int x_begin = std::max(0, -offset.x);
  const int y_begin = std::max(0, -offset.y);
  const int x_end = std::min(src.width(), dst.width() - offset.x);
  const int y_end = std::min(src.height(), dst.height() - offset.y);
  if (x_begin > 0 || y_begin > 0 || x_end < src.width() || y_end < src.height()) {
    spdlog::debug("composite_over: clipping source {}x{} at ({}, {})", src.width(), src.height(), offset.x,
                  offset.y);
  }
  for (int y = y_begin; y < y_end; ++y) {
    for (int x = x_begin; x < x_end; ++x) {
      if (!mask.at(x, y)) continue;
      const std::uint8_t* s = src.pixel(x, y);
      std::uint8_t* d = dst.pixel(x + offset.x, y + offset.y);
      const unsigned a = s[3];
      if (a == 255) {
        std::copy_n(s, 4, d);
        continue;
      }
      const unsigned inv = 255 - a;
      for (int c = 0; c < 3; ++c) {
        d[c] = static_cast<std::uint8_t>((s[c] * a + d[c] * inv + 127) / 255);
      }
      d[3] = static_cast<std::uint8_t>(a + (d[3] * inv + 127) / 255);
    }
  }
}

Image composite_over(const Image& dst, const Image& src, const Mask& mask, PixelPoint offset) {
  Image out = dst;
  composite_over_inplace(out, src, mask, offset);
  return out;
}

// ---- cursor ----------------------------------------------------------------

namespace {

constexpr int kHalf = kCursorExtent / 2;
constexpr int kRingRadius = 7;
constexpr Rgba kMagenta{255, 0, 255, 255};
constexpr Rgba kBlack{0, 0, 0, 255};

std::vector<GlyphPixel> build_glyph() {
  // Core: ring plus crosshair arms, kept one pixel inside the extent so the
  // black outline fits within 21x21.
  bool core[kCursorExtent][kCursorExtent] = {};
  for (int dy = -kHalf + 1; dy <= kHalf - 1; ++dy) {
    for (int dx = -kHalf + 1; dx <= kHalf - 1; ++dx) {
      const double r = std::sqrt(static_cast<double>(dx * dx + dy * dy));
      const bool ring = std::lround(r) == kRingRadius;
      const bool cross = dx == 0 || dy == 0;
      core[dy + kHalf][dx + kHalf] = ring || cross;
    }
  }
  std::vector<GlyphPixel> glyph;
  for (int dy = -kHalf; dy <= kHalf; ++dy) {
    for (int dx = -kHalf; dx <= kHalf; ++dx) {
      if (core[dy + kHalf][dx + kHalf]) {
        glyph.push_back({dx, dy, kMagenta});
        continue;
      }
      bool near_core = false;
      for (int ny = dy - 1; ny <= dy + 1 && !near_core; ++ny) {
        for (int nx = dx - 1; nx <= dx + 1; ++nx) {
          if (nx < -kHalf || nx > kHalf || ny < -kHalf || ny > kHalf) continue;
          if (core[ny + kHalf][nx + kHalf]) {
            near_core = true;
            break;
          }
        }
      }
      if (near_core) glyph.push_back({dx, dy, kBlack});
    }
  }
  return glyph;
}

}  // namespace

std::span<const GlyphPixel> cursor_glyph() {
  static const std::vector<GlyphPixel> glyph = build_glyph();
  return glyph;
}

void draw_cursor_inplace(Image& img, PixelPoint at) {
  for (const auto& g : cursor_glyph()) {
    const int x = at.x + g.dx;
    const int y = at.y + g.dy;
    if (img.in_bounds(x, y)) img.set(x, y, g.color);
  }
}

Image draw_cursor(const Image& img, PixelPoint at) {
  Image out = img;
  draw_cursor_inplace(out, at);
  return out;
}

Mask cursor_support(int width, int height, PixelPoint at) {
  Mask m(width, height);
  for (const auto& g : cursor_glyph()) {
    if (m.in_bounds(at.x + g.dx, at.y + g.dy)) m.set(at.x + g.dx, at.y + g.dy, true);
  }
  return m;
}

// ---- inpainting ------------------------------------------------------------

Image inpaint_diffusion(const Image& img, const Mask& hole, InpaintOptions opts) {
  if (hole.width() != img.width() || hole.height() != img.height()) {
    throw Error(ErrorCode::MaskShapeMismatch, "hole mask does not match image");
  }
  const int w = img.width();
  const int h = img.height();

  std::vector<int> index(static_cast<std::size_t>(w) * h, -1);
  std::vector<PixelPoint> cells;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (hole.at(x, y)) {
        index[static_cast<std::size_t>(y) * w + x] = static_cast<int>(cells.size());
        cells.push_back({x, y});
      }
    }
  }
  if (cells.empty()) return img;
  if (cells.size() == static_cast<std::size_t>(w) * h) {
    throw Error(ErrorCode::FullHole, "hole covers the whole image");
  }

  // Per cell: constant contribution from known neighbours and the list of
  // unknown neighbours.
  struct Stencil {
    std::array<double, 4> known_sum{};
    std::array<int, 4> unknown{};
    int n_unknown = 0;
    int n_total = 0;
  };
  std::vector<Stencil> stencils(cells.size());
  std::array<double, 4> boundary_sum{};
  std::size_t boundary_count = 0;
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Stencil& s = stencils[i];
    for (int k = 0; k < 4; ++k) {
      const int nx = cells[i].x + kDx[k];
      const int ny = cells[i].y + kDy[k];
      if (!img.in_bounds(nx, ny)) continue;
      ++s.n_total;
      const int j = index[static_cast<std::size_t>(ny) * w + nx];
      if (j >= 0) {
        s.unknown[s.n_unknown++] = j;
      } else {
        const auto* p = img.pixel(nx, ny);
        for (int c = 0; c < 4; ++c) {
          s.known_sum[c] += p[c];
          boundary_sum[c] += p[c];
        }
        ++boundary_count;
      }
    }
  }

  std::array<double, 4> seed{};
  for (int c = 0; c < 4; ++c) seed[c] = boundary_sum[c] / static_cast<double>(boundary_count);
  std::vector<std::array<double, 4>> cur(cells.size(), seed);
  std::vector<std::array<double, 4>> next(cells.size());

  const double tol = opts.tol * 255.0;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    double max_change = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const Stencil& s = stencils[i];
      for (int c = 0; c < 4; ++c) {
        double sum = s.known_sum[c];
        for (int k = 0; k < s.n_unknown; ++k) sum += cur[static_cast<std::size_t>(s.unknown[k])][c];
        const double v = sum / s.n_total;
        max_change = std::max(max_change, std::abs(v - cur[i][c]));
        next[i][c] = v;
      }
    }
    cur.swap(next);
    if (max_change < tol) break;
  }

  Image out = img;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto* p = out.pixel(cells[i].x, cells[i].y);
    for (int c = 0; c < 4; ++c) {
      p[c] = static_cast<std::uint8_t>(std::clamp(std::lround(cur[i][c]), 0L, 255L));
    }
  }
  return out;
}

// ---- masks -----------------------------------------------------------------

Mask mask_dilate(const Mask& mask, int radius) {
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "dilation radius must be non-negative");
  if (radius == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  // Chebyshev ball is separable: dilate rows, then columns.
  Mask rows(w, h);
  for (int y = 0; y < h; ++y) {
    int last = -1'000'000;
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y)) last = x;
      if (x - last <= radius) rows.set(x, y, true);
    }
    last = 1'000'000;
    for (int x = w - 1; x >= 0; --x) {
      if (mask.at(x, y)) last = x;
      if (last - x <= radius) rows.set(x, y, true);
    }
  }
  Mask out(w, h);
  for (int x = 0; x < w; ++x) {
    int last = -1'000'000;
    for (int y = 0; y < h; ++y) {
      if (rows.at(x, y)) last = y;
      if (y - last <= radius) out.set(x, y, true);
    }
    last = 1'000'000;
    for (int y = h - 1; y >= 0; --y) {
      if (rows.at(x, y)) last = y;
      if (last - y <= radius) out.set(x, y, true);
    }
  }
  return out;
}

std::optional<Rect> mask_bbox(const Mask& mask) {
  Rect r{mask.width(), mask.height(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      r.x0 = std::min(r.x0, x);
      r.y0 = std::min(r.y0, y);
      r.x1 = std::max(r.x1, x);
      r.y1 = std::max(r.y1, y);
    }
  }
  if (r.x1 < 0) return std::nullopt;
  return r;
}

Mask mask_union(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::MaskShapeMismatch, "mask union of differently sized masks");
  }
  Mask out = a;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (b.at(x, y)) out.set(x, y, true);
    }
  }
  return out;
}

void draw_contour_inplace(Image& img, const Mask& mask, PixelPoint offset, Rgba color) {
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const bool edge = !mask.test(x + 1, y) || !mask.test(x - 1, y) || !mask.test(x, y + 1) || !mask.test(x, y - 1);
      if (!edge) continue;
      const int cx = x + offset.x;
      const int cy = y + offset.y;
      if (img.in_bounds(cx, cy)) img.set(cx, cy, color);
    }
  }
}

void draw_rect_inplace(Image& img, const Rect& r, Rgba color, int thickness) {
  for (int t = 0; t < thickness; ++t) {
    const Rect e{r.x0 + t, r.y0 + t, r.x1 - t, r.y1 - t};
    if (e.x1 < e.x0 || e.y1 < e.y0) break;
    for (int x = e.x0; x <= e.x1; ++x) {
      if (img.in_bounds(x, e.y0)) img.set(x, e.y0, color);
      if (img.in_bounds(x, e.y1)) img.set(x, e.y1, color);
    }
    for (int y = e.y0; y <= e.y1; ++y) {
      if (img.in_bounds(e.x0, y)) img.set(e.x0, y, color);
      if (img.in_bounds(e.x1, y)) img.set(e.x1, y, color);
    }
  }
}

}  // namespace imagine
