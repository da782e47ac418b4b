// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace imagine {

struct PixelPoint {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Inclusive pixel rectangle: x0..x1, y0..y1.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool contains(PixelPoint p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

using Rgba = std::array<std::uint8_t, 4>;

/// Row-major 8-bit RGBA raster.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgba fill = {0, 0, 0, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  Rgba at(int x, int y) const;
  void set(int x, int y, Rgba c);
  std::uint8_t* pixel(int x, int y) { return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * 4; }
  const std::uint8_t* pixel(int x, int y) const {
    return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * 4;
  }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  /// Copy of the inclusive rectangle, clipped to the image.
  Image crop(const Rect& r) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  bool test(int x, int y) const { return in_bounds(x, y) && at(x, y); }

  std::size_t count() const;
  bool any() const { return count() > 0; }
  Mask crop(const Rect& r) const;

  std::span<const std::uint8_t> bytes() const { return data_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Per-pixel integer ids (0 = background); used for instance ground truth.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, std::uint32_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::uint32_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, std::uint32_t v) { data_[static_cast<std::size_t>(y) * width_ + x] = v; }

  Mask region(std::uint32_t id) const;
  std::span<const std::uint32_t> values() const { return data_; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> data_;
};

// ---- raster operations -----------------------------------------------------

/// Straight alpha-over of `src` onto `dst` where `mask` is set; `offset`
/// places src's origin in dst coordinates. Out-of-bounds pixels are clipped.
Image composite_over(const Image& dst, const Image& src, const Mask& mask, PixelPoint offset);

/// In-place variant used by the renderers.
void composite_over_inplace(Image& dst, const Image& src, const Mask& mask, PixelPoint offset);

inline constexpr int kCursorExtent = 21;

/// Relative offsets and colors of the cursor glyph, centered on (0,0).
struct GlyphPixel {
  int dx;
  int dy;
  Rgba color;
};
std::span<const GlyphPixel> cursor_glyph();

Image draw_cursor(const Image& img, PixelPoint at);
void draw_cursor_inplace(Image& img, PixelPoint at);

/// Canvas pixels touched by a cursor glyph at `at`.
Mask cursor_support(int width, int height, PixelPoint at);

struct InpaintOptions {
  double tol = 0.5 / 255.0;  // max per-pixel change (intensity in [0,1]) at convergence
  int max_iters = 2000;

  friend bool operator==(const InpaintOptions&, const InpaintOptions&) = default;
};

/// Fills `hole` by Jacobi iteration of 4-neighbour averaging, seeded from the
/// mean of the hole boundary. Throws Error(FullHole) when nothing is known.
Image inpaint_diffusion(const Image& img, const Mask& hole, InpaintOptions opts = {});

Mask mask_dilate(const Mask& mask, int radius);
std::optional<Rect> mask_bbox(const Mask& mask);
Mask mask_union(const Mask& a, const Mask& b);

/// Draws a 1-px outline of `mask` (placed at `offset`) in `color`.
void draw_contour_inplace(Image& img, const Mask& mask, PixelPoint offset, Rgba color);

/// Hollow rectangle outline, clipped.
void draw_rect_inplace(Image& img, const Rect& r, Rgba color, int thickness = 1);

}  // namespace imagine
