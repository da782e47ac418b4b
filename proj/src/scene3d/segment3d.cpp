// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/segment3d.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include <spdlog/spdlog.h>

#include "imagine/error.hpp"

namespace imagine {

void SegConfig::validate() const {
  auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open_unit(eps1) || !open_unit(eps2)) throw Error(ErrorCode::InvalidArgument, "eps1 and eps2 must lie in (0, 1)");
  if (!(vote_fraction > 0.0 && vote_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "vote_fraction must lie in (0, 1]");
  }
  if (n_frames < 1) throw Error(ErrorCode::InvalidArgument, "orbit needs at least one frame");
  if (orbit_radius_factor <= 1.0) throw Error(ErrorCode::InvalidArgument, "orbit must stay outside the target");
  if (frame_resolution < 8) throw Error(ErrorCode::InvalidArgument, "frame resolution is too small");
  if (!open_unit(alpha_cutoff)) throw Error(ErrorCode::InvalidArgument, "alpha_cutoff must lie in (0, 1)");
  if (voxel_resolution < 4) throw Error(ErrorCode::InvalidArgument, "voxel grid is too coarse");
}

namespace {

struct Prepared {
  Vec3 center;
  Mat3 inv_cov;
  double opacity;
  double cull_radius2;
};

std::vector<Prepared> prepare(const GaussianScene& scene, double alpha_cutoff) {
  // Beyond k standard deviations along the widest axis alpha is below the cutoff.
  const double k = std::sqrt(-2.0 * std::log(alpha_cutoff));
  std::vector<Prepared> out;
  out.reserve(scene.size());
  for (const auto& g : scene.gaussians) {
    const double r = k * g.scale.maxCoeff();
    out.push_back({g.center, g.covariance().inverse(), g.opacity, r * r});
  }
  return out;
}

double alpha_at(const Prepared& p, const Ray& ray, double* t_out) {
  const Vec3 oc = p.center - ray.origin;
  const double t = oc.dot(ray.direction);
  if (t_out) *t_out = t;
  const Vec3 d = ray.at(t) - p.center;
  return p.opacity * std::exp(-0.5 * d.dot(p.inv_cov * d));
}

std::vector<RayContribution> traverse(const std::vector<Prepared>& prepared, const Ray& ray, const SegConfig& cfg) {
  std::vector<RayContribution> hits;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const Prepared& p = prepared[i];
    const Vec3 oc = p.center - ray.origin;
    const double t = oc.dot(ray.direction);
    if (t <= 0.0) continue;
    if ((oc - t * ray.direction).squaredNorm() > p.cull_radius2) continue;
    const double a = alpha_at(p, ray, nullptr);
    if (a > cfg.alpha_cutoff) hits.push_back({i, t, std::min(a, 1.0), 0.0, 0.0});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  double transmittance = 1.0;
  std::size_t n = 0;
  for (; n < hits.size(); ++n) {
    hits[n].transmittance = transmittance;
    hits[n].contribution = transmittance * hits[n].alpha;
    transmittance *= 1.0 - hits[n].alpha;
    if (transmittance < cfg.eps2) {
      ++n;
      break;
    }
  }
  hits.resize(n);
  return hits;
}

}  // namespace

double ray_alpha(const Gaussian3D& g, const Ray& ray, double* t_out) {
  const Prepared p{g.center, g.covariance().inverse(), g.opacity, 0.0};
  return alpha_at(p, ray, t_out);
}

std::vector<RayContribution> trace_ray(const GaussianScene& scene, const Ray& ray, const SegConfig& cfg) {
  return traverse(prepare(scene, cfg.alpha_cutoff), ray, cfg);
}

void ray_vote(const GaussianScene& scene, const Camera& cam, const Mask& mask, const SegConfig& cfg, Votes& votes) {
  if (mask.width() != cam.width || mask.height() != cam.height) {
    throw Error(ErrorCode::MaskShapeMismatch, "vote mask " + std::to_string(mask.width()) + "x" +
                                                  std::to_string(mask.height()) + " does not match the camera");
  }
  votes.resize(scene.size(), 0);
  if (!mask.any()) return;
  const auto prepared = prepare(scene, cfg.alpha_cutoff);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      for (const auto& h : traverse(prepared, cam.pixel_ray(x, y), cfg)) {
        if (h.contribution > cfg.eps1) ++votes[h.index];
      }
    }
  }
}

std::vector<Camera> make_orbit(const Vec3& center, double radius, const SegConfig& cfg, double azimuth0) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "orbit radius must be positive");
  cfg.validate();
  const double dist = cfg.orbit_radius_factor * radius;
  const double ce = std::cos(cfg.orbit_elevation);
  const double se = std::sin(cfg.orbit_elevation);
  std::vector<Camera> cams;
  cams.reserve(static_cast<std::size_t>(cfg.n_frames));
  for (int i = 0; i < cfg.n_frames; ++i) {
    const double az = azimuth0 + 2.0 * std::numbers::pi * i / cfg.n_frames;
    Camera c;
    c.position = center + dist * Vec3(ce * std::cos(az), ce * std::sin(az), se);
    c.look_at = center;
    c.up = Vec3(0, 0, 1);
    c.vertical_fov = cfg.frame_fov;
    c.width = cfg.frame_resolution;
    c.height = cfg.frame_resolution;
    cams.push_back(c);
  }
  return cams;
}

std::vector<std::size_t> select_shell(const Votes& votes, double vote_fraction) {
  const auto it = std::max_element(votes.begin(), votes.end());
  if (it == votes.end() || *it == 0) throw Error(ErrorCode::NoVotes, "no Gaussian received a vote");
  const double threshold = vote_fraction * static_cast<double>(*it) - 1e-9;
  std::vector<std::size_t> shell;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i] > 0 && static_cast<double>(votes[i]) >= threshold) shell.push_back(i);
  }
  return shell;
}

std::vector<std::size_t> fill_interior(const GaussianScene& scene, const std::vector<std::size_t>& shell,
                                       int resolution) {
  if (shell.empty()) throw Error(ErrorCode::InvalidArgument, "interior fill needs a non-empty shell");
  if (resolution < 4) throw Error(ErrorCode::InvalidArgument, "voxel grid is too coarse");
  std::vector<char> in_shell(scene.size(), 0);
  Vec3 lo = scene.gaussians.at(shell.front()).center;
  Vec3 hi = lo;
  for (std::size_t i : shell) {
    const Vec3& c = scene.gaussians.at(i).center;
    in_shell[i] = 1;
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }

  // One padding voxel on every side keeps the flood seed outside the shell.
  const int n = resolution + 2;
  const Vec3 extent = (hi - lo).cwiseMax(Vec3::Constant(1e-9));
  const Vec3 cell = extent / resolution;
  auto voxel_of = [&](const Vec3& p) {
    Eigen::Vector3i v;
    for (int a = 0; a < 3; ++a) {
      v[a] = std::clamp(static_cast<int>(std::floor((p[a] - lo[a]) / cell[a])), 0, resolution - 1) + 1;
    }
    return v;
  };
  auto flat = [n](int x, int y, int z) { return (static_cast<std::size_t>(z) * n + y) * n + x; };
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(n) * n * n, 0);  // 1 shell, 2 outside

  for (std::size_t i : shell) {
    const Gaussian3D& g = scene.gaussians[i];
    const double r = g.scale.maxCoeff();
    const Eigen::Vector3i v0 = voxel_of(g.center - Vec3::Constant(r));
    const Eigen::Vector3i v1 = voxel_of(g.center + Vec3::Constant(r));
    for (int z = v0.z(); z <= v1.z(); ++z) {
      for (int y = v0.y(); y <= v1.y(); ++y) {
        for (int x = v0.x(); x <= v1.x(); ++x) {
          const Vec3 mid = lo + Vec3((x - 0.5) * cell.x(), (y - 0.5) * cell.y(), (z - 0.5) * cell.z());
          if ((mid - g.center).norm() <= r) grid[flat(x, y, z)] = 1;
        }
      }
    }
    const Eigen::Vector3i c = voxel_of(g.center);
    grid[flat(c.x(), c.y(), c.z())] = 1;
  }

  std::deque<Eigen::Vector3i> queue;
  auto seed = [&](int x, int y, int z) {
    auto& v = grid[flat(x, y, z)];
    if (v == 0) {
      v = 2;
      queue.emplace_back(x, y, z);
    }
  };
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      seed(0, a, b), seed(n - 1, a, b);
      seed(a, 0, b), seed(a, n - 1, b);
      seed(a, b, 0), seed(a, b, n - 1);
    }
  }
  static constexpr int kSteps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const Eigen::Vector3i v = queue.front();
    queue.pop_front();
    for (const auto& s : kSteps) {
      const int x = v.x() + s[0];
      const int y = v.y() + s[1];
      const int z = v.z() + s[2];
      if (x < 0 || y < 0 || z < 0 || x >= n || y >= n || z >= n) continue;
      seed(x, y, z);
    }
  }

  std::vector<std::size_t> out = shell;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (in_shell[i]) continue;
    const Vec3& c = scene.gaussians[i].center;
    if ((c.array() < lo.array()).any() || (c.array() > hi.array()).any()) continue;
    const Eigen::Vector3i v = voxel_of(c);
    if (grid[flat(v.x(), v.y(), v.z())] != 2) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Segment3DResult segment_conditional(const GaussianScene& scene, PixelPoint selection, const Camera& cam,
                                    SegmentationProvider& provider, const SegConfig& cfg) {
  cfg.validate();
  cam.validate();
  if (scene.empty()) throw Error(ErrorCode::InvalidArgument, "cannot segment an empty scene");

  auto call = [&](const SegmentRequest& req) {
    try {
      return provider.segment(req);
    } catch (const Error& e) {
      throw Error(ErrorCode::SegmentationFailed, e.what());
    }
  };

  SegmentRequest first;
  first.frames = {render_splats(scene, cam)};
  first.prompt = selection;
  first.cameras = {cam};
  const Mask sel_mask = call(first).masks.front();
  const auto box = mask_bbox(sel_mask);
  if (!box) throw Error(ErrorCode::SegmentationFailed, "provider found nothing under the selection");

  const auto hits = trace_ray(scene, cam.pixel_ray(selection.x, selection.y), cfg);
  if (hits.empty()) throw Error(ErrorCode::SegmentationFailed, "selection does not hit any Gaussian");
  const auto best = std::max_element(hits.begin(), hits.end(),
                                     [](const auto& a, const auto& b) { return a.contribution < b.contribution; });
  const Ray sel_ray = cam.pixel_ray(selection.x, selection.y);
  const Vec3 hit_point = sel_ray.at(best->t);
  const double depth = (hit_point - cam.position).dot(cam.forward());

  // The hit lies on the visible surface; the target centre sits one radius behind it.
  const double radius = std::max(0.5 * std::max(box->width(), box->height()), 1.0) * depth / cam.focal();
  const Ray mid = cam.ray_through(0.5 * (box->x0 + box->x1 + 1), 0.5 * (box->y0 + box->y1 + 1));
  const Vec3 center = mid.at((depth + radius) / mid.direction.dot(cam.forward()));

  const double azimuth0 = std::atan2(cam.position.y() - center.y(), cam.position.x() - center.x());
  Segment3DResult out;
  out.orbit = make_orbit(center, radius, cfg, azimuth0);

  SegmentRequest video;
  video.mode = SegmentMode::VideoSequence;
  video.cameras = out.orbit;
  for (const auto& c : out.orbit) video.frames.push_back(render_splats(scene, c));
  const auto proj = out.orbit.front().project(hit_point);
  video.prompt = {std::clamp(static_cast<int>(std::floor(proj.u)), 0, cfg.frame_resolution - 1),
                  std::clamp(static_cast<int>(std::floor(proj.v)), 0, cfg.frame_resolution - 1)};
  const SegmentResponse tracked = call(video);
  if (std::none_of(tracked.masks.begin(), tracked.masks.end(), [](const Mask& m) { return m.any(); })) {
    throw Error(ErrorCode::SegmentationFailed, "provider lost the target in every orbit frame");
  }

  for (std::size_t f = 0; f < out.orbit.size(); ++f) ray_vote(scene, out.orbit[f], tracked.masks[f], cfg, out.votes);
  out.shell = select_shell(out.votes, cfg.vote_fraction);
  out.object_indices = fill_interior(scene, out.shell, cfg.voxel_resolution);
  spdlog::debug("3d segmentation: {} shell, {} object of {}", out.shell.size(), out.object_indices.size(),
                scene.size());

  std::vector<char> taken(scene.size(), 0);
  for (std::size_t i : out.object_indices) {
    taken[i] = 1;
    out.object.gaussians.push_back(scene.gaussians[i]);
  }
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (taken[i]) continue;
    out.remainder_indices.push_back(i);
    out.remainder.gaussians.push_back(scene.gaussians[i]);
  }
  return out;
}

Vec3 world_direction(Direction dir) {
  switch (dir) {
    case Direction::Up: return Vec3(0, 1, 0);
    case Direction::Down: return Vec3(0, -1, 0);
    case Direction::Left: return Vec3(-1, 0, 0);
    case Direction::Right: return Vec3(1, 0, 0);
  }
  return Vec3::Zero();
}

Vec3 centroid(const GaussianScene& scene) {
  if (scene.empty()) throw Error(ErrorCode::InvalidArgument, "empty scene has no centroid");
  Vec3 sum = Vec3::Zero();
  for (const auto& g : scene.gaussians) sum += g.center;
  return sum / static_cast<double>(scene.size());
}

Transform3DResult transform_3d(const GaussianScene& object, Direction dir, double step, const TopDownView& view,
                               const std::optional<Mask>& region) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  const Vec3 delta = step * world_direction(dir);
  if (region) {
    if (region->width() != view.resolution || region->height() != view.resolution) {
      throw Error(ErrorCode::MaskShapeMismatch, "region does not match the top-down view");
    }
    const Eigen::Vector2d px = view.world_to_pixel(centroid(object) + delta);
    const int u = static_cast<int>(std::floor(px.x()));
    const int v = static_cast<int>(std::floor(px.y()));
    if (!region->test(u, v)) return {object, true};
  }
  Transform3DResult out{object, false};
  for (auto& g : out.object.gaussians) g.center += delta;
  return out;
}

GaussianScene merge(const GaussianScene& a, const GaussianScene& b) {
  GaussianScene out = a;
  out.gaussians.insert(out.gaussians.end(), b.gaussians.begin(), b.gaussians.end());
  return out;
}

}  // namespace imagine
