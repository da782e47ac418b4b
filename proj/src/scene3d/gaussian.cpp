// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imagine/error.hpp"

namespace imagine {

Mat3 Gaussian3D::covariance() const {
  const Mat3 r = rotation.normalized().toRotationMatrix();
  const Mat3 s = scale.asDiagonal();
  return r * s * s * r.transpose();
}

void validate(const GaussianScene& scene) {
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& g = scene.gaussians[i];
    if ((g.scale.array() <= 0.0).any()) {
      throw Error(ErrorCode::InvalidArgument, "gaussian " + std::to_string(i) + " has non-positive scale");
    }
    if (std::abs(g.rotation.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::InvalidArgument, "gaussian " + std::to_string(i) + " has non-unit rotation");
    }
    if (!(g.opacity >= 0.0 && g.opacity <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "gaussian " + std::to_string(i) + " opacity outside [0,1]");
    }
  }
}

// ---- camera ----------------------------------------------------------------

void Camera::validate() const {
  if ((position - look_at).norm() < 1e-12) {
    throw Error(ErrorCode::DegenerateCamera, "camera position coincides with look_at");
  }
  if (!(vertical_fov > 0.0 && vertical_fov < M_PI)) {
    throw Error(ErrorCode::DegenerateCamera, "vertical fov must lie in (0, pi)");
  }
  if (width < 1 || height < 1) throw Error(ErrorCode::DegenerateCamera, "camera resolution must be positive");
  if (forward().cross(up).norm() < 1e-9) throw Error(ErrorCode::DegenerateCamera, "up vector parallel to view");
}

Vec3 Camera::forward() const { return (look_at - position).normalized(); }
Vec3 Camera::right() const { return forward().cross(up).normalized(); }
Vec3 Camera::true_up() const { return right().cross(forward()); }
double Camera::focal() const { return 0.5 * height / std::tan(0.5 * vertical_fov); }

Ray Camera::ray_through(double u, double v) const {
  const double f = focal();
  const double x = (u - 0.5 * width) / f;
  const double y = (0.5 * height - v) / f;
  return Ray{position, (forward() + x * right() + y * true_up()).normalized()};
}

Camera::Projection Camera::project(const Vec3& p) const {
  const Vec3 d = p - position;
  const double z = d.dot(forward());
  const double f = focal();
  return {0.5 * width + f * d.dot(right()) / z, 0.5 * height - f * d.dot(true_up()) / z, z};
}

// ---- splatting -------------------------------------------------------------

std::vector<double> rasterize_splats(const GaussianScene& scene, const Camera& cam, const SplatOptions& opts,
                                     const std::function<void(std::size_t, std::size_t, double)>& visit) {
  cam.validate();
  const int w = cam.width;
  const int h = cam.height;
  const double f = cam.focal();
  const Vec3 fwd = cam.forward();
  const Vec3 rgt = cam.right();
  const Vec3 upv = cam.true_up();
  Mat3 view;
  view.row(0) = rgt;
  view.row(1) = upv;
  view.row(2) = fwd;

  struct Splat {
    std::size_t index;
    double depth;
    double u, v;
    double ia, ib, ic;  // inverse 2D covariance [ia ib; ib ic]
    int x0, y0, x1, y1;
  };
  std::vector<Splat> splats;
  splats.reserve(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& g = scene.gaussians[i];
    if (g.opacity <= 0.0) continue;
    const Vec3 pc = view * (g.center - cam.position);
    const double x = pc.x();
    const double y = pc.y();
    const double z = pc.z();
    if (z <= opts.near_plane) continue;
    Eigen::Matrix<double, 2, 3> jac;
    jac << f / z, 0.0, -f * x / (z * z), 0.0, -f / z, f * y / (z * z);
    const Mat3 cov_cam = view * g.covariance() * view.transpose();
    const Eigen::Matrix2d cov2 = jac * cov_cam * jac.transpose();
    const double det = cov2.determinant();
    if (det <= 1e-18) continue;
    const double u = 0.5 * w + f * x / z;
    const double v = 0.5 * h - f * y / z;
    // Support where opacity * exp(-m^2/2) can exceed min_alpha.
    const double m2 = 2.0 * std::log(std::max(g.opacity / opts.min_alpha, 1.0));
    const double mid = 0.5 * (cov2(0, 0) + cov2(1, 1));
    const double lambda = mid + std::sqrt(std::max(mid * mid - det, 0.0));
    const double radius = std::sqrt(m2 * lambda);
    Splat s{i, z, u, v, cov2(1, 1) / det, -cov2(0, 1) / det, cov2(0, 0) / det,
            std::max(0, static_cast<int>(std::floor(u - radius))), std::max(0, static_cast<int>(std::floor(v - radius))),
            std::min(w - 1, static_cast<int>(std::ceil(u + radius))),
            std::min(h - 1, static_cast<int>(std::ceil(v + radius)))};
    if (s.x0 > s.x1 || s.y0 > s.y1) continue;
    splats.push_back(s);
  }
  std::stable_sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) { return a.depth < b.depth; });

  std::vector<double> transmittance(static_cast<std::size_t>(w) * h, 1.0);
  for (const Splat& s : splats) {
    const double opacity = scene.gaussians[s.index].opacity;
    for (int py = s.y0; py <= s.y1; ++py) {
      for (int px = s.x0; px <= s.x1; ++px) {
        const std::size_t p = static_cast<std::size_t>(py) * w + px;
        double& t = transmittance[p];
        if (t < 1e-6) continue;
        const double dx = px + 0.5 - s.u;
        const double dy = py + 0.5 - s.v;
        const double power = -0.5 * (s.ia * dx * dx + 2.0 * s.ib * dx * dy + s.ic * dy * dy);
        const double alpha = opacity * std::exp(power);
        if (alpha < opts.min_alpha) continue;
        visit(p, s.index, t * alpha);
        t *= 1.0 - alpha;
      }
    }
  }
  return transmittance;
}

Image render_splats(const GaussianScene& scene, const Camera& cam, const SplatOptions& opts) {
  if (scene.empty()) throw Error(ErrorCode::InvalidArgument, "cannot render an empty gaussian scene");
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  std::vector<Vec3> accum(n, Vec3::Zero());
  const auto trans = rasterize_splats(scene, cam, opts, [&](std::size_t p, std::size_t g, double weight) {
    accum[p] += weight * scene.gaussians[g].color;
  });
  Image img(cam.width, cam.height);
  for (std::size_t p = 0; p < n; ++p) {
    const Vec3 c = accum[p] + trans[p] * opts.background;
    auto* px = img.pixel(static_cast<int>(p % cam.width), static_cast<int>(p / cam.width));
    for (int k = 0; k < 3; ++k) {
      px[k] = static_cast<std::uint8_t>(std::clamp(std::lround(c[k] * 255.0), 0L, 255L));
    }
    px[3] = 255;
  }
  return img;
}

LabelMap render_label_map(const GaussianScene& scene, std::span<const std::uint32_t> labels, const Camera& cam,
                          double min_weight) {
  if (labels.size() != scene.size()) throw Error(ErrorCode::InvalidArgument, "one label per gaussian required");
  std::vector<std::uint32_t> ids(labels.begin(), labels.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<std::size_t> slot(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    slot[i] = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), labels[i]) - ids.begin());
  }
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  std::vector<double> weight(n * ids.size(), 0.0);
  rasterize_splats(scene, cam, {}, [&](std::size_t p, std::size_t g, double wgt) {
    weight[p * ids.size() + slot[g]] += wgt;
  });
  LabelMap out(cam.width, cam.height);
  for (std::size_t p = 0; p < n; ++p) {
    std::uint32_t best = 0;
    double best_w = min_weight;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const double wk = weight[p * ids.size() + k];
      if (ids[k] != 0 && wk >= best_w) {
        best = ids[k];
        best_w = wk;
      }
    }
    out.set(static_cast<int>(p % cam.width), static_cast<int>(p / cam.width), best);
  }
  return out;
}

// ---- top-down view ---------------------------------------------------------

namespace {
constexpr double kTopDownDistance = 50.0;  // in units of half_extent
}

Camera TopDownView::camera() const {
  Camera cam;
  const double dist = kTopDownDistance * half_extent;
  cam.position = Vec3(center.x(), center.y(), ground_z + dist);
  cam.look_at = Vec3(center.x(), center.y(), ground_z);
  cam.up = Vec3(0, 1, 0);
  cam.vertical_fov = 2.0 * std::atan(1.0 / kTopDownDistance);
  cam.width = resolution;
  cam.height = resolution;
  return cam;
}

Eigen::Vector2d TopDownView::world_to_pixel(const Vec3& p) const {
  const double s = pixels_per_unit();
  return {0.5 * resolution + s * (p.x() - center.x()), 0.5 * resolution - s * (p.y() - center.y())};
}

Vec3 TopDownView::pixel_to_world(double u, double v) const {
  const double s = pixels_per_unit();
  return Vec3(center.x() + (u - 0.5 * resolution) / s, center.y() - (v - 0.5 * resolution) / s, ground_z);
}

TopDownView fit_topdown(const GaussianScene& scene, int resolution, double margin) {
  if (scene.empty()) throw Error(ErrorCode::InvalidArgument, "cannot fit a view to an empty scene");
  Vec3 lo = scene.gaussians.front().center;
  Vec3 hi = lo;
  for (const auto& g : scene.gaussians) {
    lo = lo.cwiseMin(g.center);
    hi = hi.cwiseMax(g.center);
  }
  TopDownView view;
  view.center = Eigen::Vector2d(0.5 * (lo.x() + hi.x()), 0.5 * (lo.y() + hi.y()));
  view.half_extent = std::max(0.5 * std::max(hi.x() - lo.x(), hi.y() - lo.y()), 1e-3) * (1.0 + margin);
  view.resolution = resolution;
  view.ground_z = lo.z();
  return view;
}

Image render_topdown(const GaussianScene& scene, const TopDownView& view, const SplatOptions& opts) {
  return render_splats(scene, view.camera(), opts);
}

}  // namespace imagine
