// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "imagine/gaussian.hpp"

namespace imagine {

struct ClusterSceneOptions {
  int per_cluster = 100;
  double sigma = 0.1;        // spread of centres within a cluster
  double truncate = 2.5;     // centres are resampled beyond this many sigma
  double separation = 20.0;  // distance between cluster centres, in sigma
  double splat_scale = 0.3;  // Gaussian extent, in sigma
  double opacity = 0.4;
};

/// Gaussians with known cluster membership. Label i + 1 marks cluster i.
struct LabelledGaussians {
  GaussianScene scene;
  std::vector<std::uint32_t> labels;
  std::vector<Vec3> cluster_centers;
};

/// Two isotropic clusters ("balls") on the ground plane, A at the origin and
/// B along +x, with colours varied per seed.
LabelledGaussians make_two_clusters(std::uint64_t seed, const ClusterSceneOptions& opts = {});

}  // namespace imagine
