// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "imagine/direction.hpp"
#include "imagine/gaussian.hpp"
#include "imagine/image.hpp"
#include "imagine/segmenter.hpp"

namespace imagine {

struct SegConfig {
  double eps1 = 0.05;          // minimum contribution T*alpha that earns a vote
  double eps2 = 0.01;          // traversal stops once transmittance drops below this
  double vote_fraction = 0.1;  // shell keeps votes >= fraction * max
  int n_frames = 24;
  double orbit_elevation = 0.349065850398866;  // 20 degrees
  double orbit_radius_factor = 3.0;
  double frame_fov = 0.872664625997165;  // 50 degrees
  int frame_resolution = 96;
  double alpha_cutoff = 1e-4;  // a ray intersects a Gaussian when alpha exceeds this
  int voxel_resolution = 64;

  /// Throws Error(InvalidArgument).
  void validate() const;
};

/// Alpha of `g` seen along `ray`: opacity * exp(-d' inv(Sigma) d / 2) at the
/// ray point nearest to the centre. `t_out` receives that point's parameter.
double ray_alpha(const Gaussian3D& g, const Ray& ray, double* t_out = nullptr);

struct RayContribution {
  std::size_t index = 0;
  double t = 0;
  double alpha = 0;
  double transmittance = 0;  // before this Gaussian
  double contribution = 0;   // transmittance * alpha
};

/// Front-to-back traversal of the Gaussians a ray intersects, stopping after
/// the transmittance falls below `eps2`.
std::vector<RayContribution> trace_ray(const GaussianScene& scene, const Ray& ray, const SegConfig& cfg);

using Votes = std::vector<std::uint32_t>;

/// Casts one ray per masked pixel and increments the votes of every
/// Gaussian contributing more than eps1. `votes` is resized to the scene.
void ray_vote(const GaussianScene& scene, const Camera& cam, const Mask& mask, const SegConfig& cfg, Votes& votes);

/// Evenly spaced cameras on a circle around `center` at the configured
/// elevation (z is up). Azimuth is measured from +x, starting at `azimuth0`.
std::vector<Camera> make_orbit(const Vec3& center, double radius, const SegConfig& cfg, double azimuth0 = 0.0);

/// Indices whose votes reach vote_fraction times the highest vote.
/// Throws Error(NoVotes) when nothing was voted for.
std::vector<std::size_t> select_shell(const Votes& votes, double vote_fraction);

/// Shell plus the Gaussians enclosed by it, sorted.
std::vector<std::size_t> fill_interior(const GaussianScene& scene, const std::vector<std::size_t>& shell,
                                       int resolution = 64);

struct Segment3DResult {
  GaussianScene object;
  GaussianScene remainder;
  std::vector<std::size_t> object_indices;
  std::vector<std::size_t> remainder_indices;
  std::vector<std::size_t> shell;
  std::vector<Camera> orbit;
  Votes votes;
};

/// Selects the content under `selection` in `cam`, orbits it, asks the
/// provider to track it through the orbit and partitions the scene.
/// Throws Error(SegmentationFailed) or Error(NoVotes).
Segment3DResult segment_conditional(const GaussianScene& scene, PixelPoint selection, const Camera& cam,
                                    SegmentationProvider& provider, const SegConfig& cfg = {});

/// Top-down view direction in world units: up is +y, right is +x.
Vec3 world_direction(Direction dir);

Vec3 centroid(const GaussianScene& scene);

struct Transform3DResult {
  GaussianScene object;
  bool refused = false;
};

/// Translates every centre by `step` along the mapped direction. With a
/// region (a mask in the pixel space of `view`) the move is refused when the
/// centroid would leave it or the view.
Transform3DResult transform_3d(const GaussianScene& object, Direction dir, double step, const TopDownView& view,
                               const std::optional<Mask>& region = std::nullopt);

GaussianScene merge(const GaussianScene& a, const GaussianScene& b);

}  // namespace imagine
