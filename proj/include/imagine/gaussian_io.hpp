// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "imagine/gaussian.hpp"
#include "imagine/png_io.hpp"

namespace imagine {

/// Gaussian scene file: one line of JSON header, then `count` little-endian
/// records of 14 float32 (center, scale, quaternion wxyz, opacity, rgb).
Bytes encode_gaussians(const GaussianScene& scene);
GaussianScene decode_gaussians(std::span<const std::uint8_t> bytes);
void save_gaussians(const std::filesystem::path& path, const GaussianScene& scene);
GaussianScene load_gaussians(const std::filesystem::path& path);

/// Binary little-endian PLY as written by common splatting trainers
/// (x y z, f_dc_*, opacity logit, log scale_*, rot_* wxyz). Other properties
/// are skipped.
GaussianScene import_ply(std::span<const std::uint8_t> bytes);

/// Camera trajectory: a JSON array of {position, look_at, up, fov, width, height}.
std::string cameras_to_json(const std::vector<Camera>& cams);
std::vector<Camera> cameras_from_json(const std::string& text);

}  // namespace imagine
