// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/segmenter.hpp"

#include <deque>

#include "imagine/error.hpp"

namespace imagine {

void validate(const SegmentRequest& req) {
  if (req.frames.empty()) throw Error(ErrorCode::InvalidArgument, "segment request has no frames");
  if (req.mode == SegmentMode::SingleImage && req.frames.size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "single-image request must carry exactly one frame");
  }
  if (!req.frames.front().in_bounds(req.prompt.x, req.prompt.y)) {
    throw Error(ErrorCode::InvalidArgument, "prompt outside frame 0");
  }
  if (!req.cameras.empty() && req.cameras.size() != req.frames.size()) {
    throw Error(ErrorCode::InvalidArgument, "camera count must match frame count");
  }
}

SegmentResponse SegmentationProvider::segment(const SegmentRequest& req) {
  validate(req);
  SegmentResponse resp = do_segment(req);
  if (resp.masks.size() != req.frames.size()) {
    throw Error(ErrorCode::ProviderRejected, "provider returned " + std::to_string(resp.masks.size()) +
                                                 " masks for " + std::to_string(req.frames.size()) + " frames");
  }
  for (std::size_t i = 0; i < resp.masks.size(); ++i) {
    if (resp.masks[i].width() != req.frames[i].width() || resp.masks[i].height() != req.frames[i].height()) {
      throw Error(ErrorCode::ProviderRejected, "mask " + std::to_string(i) + " does not match its frame");
    }
  }
  if (resp.confidence && !(*resp.confidence >= 0.0 && *resp.confidence <= 1.0)) {
    throw Error(ErrorCode::ProviderRejected, "confidence outside [0,1]");
  }
  return resp;
}

// ---- instance-map oracle ---------------------------------------------------

Mask flood_region(const LabelMap& labels, PixelPoint seed) {
  Mask out(labels.width(), labels.height());
  if (!labels.in_bounds(seed.x, seed.y)) return out;
  const std::uint32_t id = labels.at(seed.x, seed.y);
  if (id == 0) return out;
  std::deque<PixelPoint> queue{seed};
  out.set(seed.x, seed.y, true);
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const PixelPoint p = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int nx = p.x + kDx[k];
      const int ny = p.y + kDy[k];
      if (!labels.in_bounds(nx, ny) || out.at(nx, ny) || labels.at(nx, ny) != id) continue;
      out.set(nx, ny, true);
      queue.push_back({nx, ny});
    }
  }
  return out;
}

InstanceMapOracle::InstanceMapOracle(LabelMap map) : map_(std::move(map)) {}

SegmentResponse InstanceMapOracle::do_segment(const SegmentRequest& req) {
  const Image& f0 = req.frames.front();
  if (f0.width() != map_.width() || f0.height() != map_.height()) {
    throw Error(ErrorCode::ProviderRejected, "frame size differs from the instance map");
  }
  const Mask region = flood_region(map_, req.prompt);
  SegmentResponse resp;
  resp.masks.assign(req.frames.size(), region);
  resp.confidence = 1.0;
  return resp;
}

std::shared_ptr<SegmentationProvider> oracle_from_instance_map(LabelMap map) {
  return std::make_shared<InstanceMapOracle>(std::move(map));
}

// ---- gaussian oracle -------------------------------------------------------

GaussianLabelOracle::GaussianLabelOracle(GaussianScene scene, std::vector<std::uint32_t> labels, double min_weight)
    : scene_(std::move(scene)), labels_(std::move(labels)), min_weight_(min_weight) {
  if (labels_.size() != scene_.size()) throw Error(ErrorCode::InvalidArgument, "one label per gaussian required");
}

SegmentResponse GaussianLabelOracle::do_segment(const SegmentRequest& req) {
  if (req.cameras.size() != req.frames.size()) {
    throw Error(ErrorCode::ProviderRejected, "gaussian oracle needs a camera per frame");
  }
  SegmentResponse resp;
  resp.confidence = 1.0;
  std::uint32_t target = 0;
  for (std::size_t i = 0; i < req.frames.size(); ++i) {
    const LabelMap map = render_label_map(scene_, labels_, req.cameras[i], min_weight_);
    if (i == 0) target = map.at(req.prompt.x, req.prompt.y);
    resp.masks.push_back(target == 0 ? Mask(map.width(), map.height()) : map.region(target));
  }
  return resp;
}

}  // namespace imagine
