// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "imagine/image.hpp"

namespace imagine {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// One anisotropic 3D Gaussian. Colours are linear in [0,1]; only the
/// view-independent (degree 0) term is modelled.
struct Gaussian3D {
  Vec3 center = Vec3::Zero();
  Vec3 scale = Vec3::Ones();  // per-axis standard deviation
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  double opacity = 1.0;
  Vec3 color = Vec3::Ones();

  Mat3 covariance() const;
};

/// Indices into `gaussians` are stable for the lifetime of the scene; votes
/// and label vectors are keyed by them.
struct GaussianScene {
  std::vector<Gaussian3D> gaussians;

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }
};

/// Throws Error(InvalidArgument) when a Gaussian breaks its invariants.
void validate(const GaussianScene& scene);

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  Vec3 at(double t) const { return origin + t * direction; }
};

/// Pinhole camera; pixel (i, j) covers [i, i+1) x [j, j+1) in continuous
/// image coordinates, v grows downwards.
struct Camera {
  Vec3 position = Vec3(0, 0, 1);
  Vec3 look_at = Vec3::Zero();
  Vec3 up = Vec3(0, 1, 0);
  double vertical_fov = 0.8;
  int width = 64;
  int height = 64;

  /// Throws Error(DegenerateCamera).
  void validate() const;

  Vec3 forward() const;
  Vec3 right() const;
  Vec3 true_up() const;
  double focal() const;

  Ray ray_through(double u, double v) const;
  Ray pixel_ray(int x, int y) const { return ray_through(x + 0.5, y + 0.5); }

  /// Continuous image coordinates and camera-space depth of a world point.
  struct Projection {
    double u = 0;
    double v = 0;
    double depth = 0;
  };
  Projection project(const Vec3& p) const;
};

struct SplatOptions {
  Vec3 background = Vec3::Zero();
  double near_plane = 1e-3;
  double min_alpha = 1e-6;
};

/// Front-to-back splat rasterisation shared by the colour and label
/// renderers. `visit(pixel_index, gaussian_index, weight)` receives T*alpha.
/// Returns the final per-pixel transmittance.
std::vector<double> rasterize_splats(const GaussianScene& scene, const Camera& cam, const SplatOptions& opts,
                                     const std::function<void(std::size_t, std::size_t, double)>& visit);

/// EWA-style splatting with back-to-front-equivalent compositing.
Image render_splats(const GaussianScene& scene, const Camera& cam, const SplatOptions& opts = {});

/// Per-pixel dominant label: the label whose accumulated contribution is
/// largest, provided it reaches `min_weight`; 0 otherwise. Gaussians with
/// label 0 occlude but never win.
LabelMap render_label_map(const GaussianScene& scene, std::span<const std::uint32_t> labels, const Camera& cam,
                          double min_weight = 0.3);

/// Orthographic-style top-down view over a square world-space window
/// centred at `center` (x right, y up in the image, z is world up).
struct TopDownView {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double half_extent = 1.0;
  int resolution = 256;
  double ground_z = 0.0;

  Camera camera() const;
  double pixels_per_unit() const { return resolution / (2.0 * half_extent); }
  /// Approximate mapping on the ground plane (exact at z = ground_z).
  Eigen::Vector2d world_to_pixel(const Vec3& p) const;
  Vec3 pixel_to_world(double u, double v) const;
};

/// Smallest square view enclosing every Gaussian center with a margin.
TopDownView fit_topdown(const GaussianScene& scene, int resolution = 256, double margin = 0.15);

Image render_topdown(const GaussianScene& scene, const TopDownView& view, const SplatOptions& opts = {});

}  // namespace imagine
