// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the task generators.

#pragma once

#include <optional>

#include "imagine/tasks.hpp"

namespace imagine::detail {

/// Low-frequency waves plus grain around `tone`.
Image textured_background(Rng& rng, int width, int height, Rgba tone, double amplitude);

/// Solid fill with a darker 1-px border.
void paint_object(Image& img, const Mask& mask, Rgba color);

/// True when the pixels labelled `id` inside `window` form one 4-connected
/// region. `window` must cover every pixel of `id`.
bool single_component(const LabelMap& labels, std::uint32_t id, const Rect& window);

/// Pixels of `id` in `window` with no other instance within `margin`
/// (Chebyshev).
std::size_t core_pixels(const LabelMap& labels, std::uint32_t id, const Rect& window, int margin);

std::size_t count_label(const LabelMap& labels, std::uint32_t id, const Rect& window);
Rect clip_rect(const Rect& r, int width, int height);

std::optional<Rect> label_bbox(const LabelMap& labels, std::uint32_t id);

}  // namespace imagine::detail
