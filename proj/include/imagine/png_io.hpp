// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "imagine/image.hpp"

namespace imagine {

using Bytes = std::vector<std::uint8_t>;

/// RGBA 8-bit PNG. Encoding is deterministic for a given image.
Bytes encode_png(const Image& img);
Image decode_png(std::span<const std::uint8_t> bytes);

/// Single-channel 8-bit PNG, 0 = false, 255 = true. Decoding treats any
/// non-zero sample as true.
Bytes encode_mask_png(const Mask& mask);
Mask decode_mask_png(std::span<const std::uint8_t> bytes);

/// Single-channel 16-bit PNG of instance ids.
Bytes encode_label_png(const LabelMap& labels);
LabelMap decode_label_png(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

inline Image read_png(const std::filesystem::path& p) { return decode_png(read_file(p)); }
inline void write_png(const std::filesystem::path& p, const Image& img) { write_file(p, encode_png(img)); }

}  // namespace imagine
