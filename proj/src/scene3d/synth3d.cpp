// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/synth3d.hpp"

#include <random>

#include "imagine/error.hpp"

namespace imagine {

LabelledGaussians make_two_clusters(std::uint64_t seed, const ClusterSceneOptions& opts) {
  if (opts.per_cluster < 1 || opts.sigma <= 0.0 || opts.separation <= 0.0 || opts.splat_scale <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid cluster scene options");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, opts.sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LabelledGaussians out;
  out.cluster_centers = {Vec3(0, 0, 0), Vec3(opts.separation * opts.sigma, 0, 0)};
  for (std::uint32_t c = 0; c < 2; ++c) {
    const Vec3 tint(0.3 + 0.7 * unit(rng), 0.3 + 0.7 * unit(rng), 0.3 + 0.7 * unit(rng));
    for (int i = 0; i < opts.per_cluster; ++i) {
      Gaussian3D g;
      Vec3 d;
      do {
        d = Vec3(normal(rng), normal(rng), normal(rng));
      } while (d.norm() > opts.truncate * opts.sigma);
      g.center = out.cluster_centers[c] + d;
      g.scale = Vec3::Constant(opts.splat_scale * opts.sigma);
      g.opacity = opts.opacity;
      g.color = (tint + Vec3(unit(rng), unit(rng), unit(rng)) * 0.1).cwiseMin(1.0);
      out.scene.gaussians.push_back(g);
      out.labels.push_back(c + 1);
    }
  }
  return out;
}

}  // namespace imagine
