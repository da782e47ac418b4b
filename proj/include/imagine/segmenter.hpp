// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "imagine/gaussian.hpp"
#include "imagine/image.hpp"

namespace imagine {

enum class SegmentMode { SingleImage, VideoSequence };

struct SegmentRequest {
  SegmentMode mode = SegmentMode::SingleImage;
  std::vector<Image> frames;
  PixelPoint prompt;  // positive point on frames[0]
  /// Frame poses when the frames were rendered from a known scene. Remote
  /// providers receive them as advisory metadata; oracles may use them.
  std::vector<Camera> cameras;
};

struct SegmentResponse {
  std::vector<Mask> masks;  // one per frame; empty masks mean "nothing selected"
  std::optional<double> confidence;
};

/// Throws Error(InvalidArgument) when the request breaks its invariants.
void validate(const SegmentRequest& req);

class SegmentationProvider {
 public:
  virtual ~SegmentationProvider() = default;

  /// Validates the request and the response shape. A response whose mask
  /// count or dimensions disagree with the frames is rejected whole.
  SegmentResponse segment(const SegmentRequest& req);

 private:
  virtual SegmentResponse do_segment(const SegmentRequest& req) = 0;
};

/// Ground truth provider over an instance id map: returns the 4-connected
/// region of equal id containing the prompt. Id 0 yields an empty mask.
/// Every frame of a video request receives the same region.
class InstanceMapOracle final : public SegmentationProvider {
 public:
  explicit InstanceMapOracle(LabelMap map);

  const LabelMap& map() const { return map_; }

 private:
  SegmentResponse do_segment(const SegmentRequest& req) override;
  LabelMap map_;
};

std::shared_ptr<SegmentationProvider> oracle_from_instance_map(LabelMap map);

/// Connected component of `labels` containing `seed` (4-neighbourhood).
Mask flood_region(const LabelMap& labels, PixelPoint seed);

/// Ground truth for Gaussian scenes: needs the request's camera poses, picks
/// the label dominant at the prompt in frame 0 and returns, per frame, the
/// pixels where that label dominates.
class GaussianLabelOracle final : public SegmentationProvider {
 public:
  GaussianLabelOracle(GaussianScene scene, std::vector<std::uint32_t> labels, double min_weight = 0.3);

 private:
  SegmentResponse do_segment(const SegmentRequest& req) override;
  GaussianScene scene_;
  std::vector<std::uint32_t> labels_;
  double min_weight_;
};

struct RemoteOptions {
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{250};  // doubled after every retry
};

/// HTTP client for a segmentation service. See docs/protocols.md for the
/// wire format. `auth_token` may be empty.
class RemoteSegmenter final : public SegmentationProvider {
 public:
  RemoteSegmenter(std::string endpoint, std::string auth_token, RemoteOptions opts = {});

  const std::string& endpoint() const { return endpoint_; }
  int last_attempts() const { return last_attempts_.load(); }

 private:
  SegmentResponse do_segment(const SegmentRequest& req) override;
  std::string endpoint_;
  std::string auth_token_;
  RemoteOptions opts_;
  std::atomic<int> last_attempts_{0};
};

std::shared_ptr<SegmentationProvider> remote_provider(const std::string& endpoint, const std::string& auth_token,
                                                      RemoteOptions opts = {});

/// JSON metadata part of a segmentation request, as sent on the wire.
std::string segment_request_json(const SegmentRequest& req);

}  // namespace imagine
