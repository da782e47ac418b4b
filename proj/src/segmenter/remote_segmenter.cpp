// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <json.hpp>

#include "imagine/digest.hpp"
#include "imagine/error.hpp"
#include "imagine/png_io.hpp"
#include "imagine/segmenter.hpp"
#include "net/http.hpp"

namespace imagine {

using nlohmann::json;

namespace {

json camera_json(const Camera& c) {
  return {{"position", {c.position.x(), c.position.y(), c.position.z()}},
          {"look_at", {c.look_at.x(), c.look_at.y(), c.look_at.z()}},
          {"up", {c.up.x(), c.up.y(), c.up.z()}},
          {"vertical_fov", c.vertical_fov},
          {"width", c.width},
          {"height", c.height}};
}

}  // namespace

std::string segment_request_json(const SegmentRequest& req) {
  json j = {{"mode", req.mode == SegmentMode::SingleImage ? "single" : "video"},
            {"prompt", {{"x", req.prompt.x}, {"y", req.prompt.y}}},
            {"num_frames", req.frames.size()}};
  if (!req.cameras.empty()) {
    j["cameras"] = json::array();
    for (const auto& c : req.cameras) j["cameras"].push_back(camera_json(c));
  }
  return j.dump();
}

RemoteSegmenter::RemoteSegmenter(std::string endpoint, std::string auth_token, RemoteOptions opts)
    : endpoint_(std::move(endpoint)), auth_token_(std::move(auth_token)), opts_(opts) {
  net::parse_url(endpoint_);
}

SegmentResponse RemoteSegmenter::do_segment(const SegmentRequest& req) {
  std::vector<net::Part> parts;
  parts.push_back({"request", segment_request_json(req), "", "application/json"});
  for (std::size_t i = 0; i < req.frames.size(); ++i) {
    const Bytes png = encode_png(req.frames[i]);
    parts.push_back({"frame_" + std::to_string(i), std::string(png.begin(), png.end()),
                     "frame_" + std::to_string(i) + ".png", "image/png"});
  }
  net::Headers headers;
  if (!auth_token_.empty()) headers.emplace_back("Authorization", "Bearer " + auth_token_);

  int attempts = 0;
  net::Response r;
  try {
    r = net::with_retries(
        {opts_.max_retries, opts_.backoff},
        [&] { return net::post_multipart(endpoint_, headers, parts, opts_.timeout); }, &attempts);
  } catch (const Error&) {
    last_attempts_ = attempts;
    throw;
  }
  last_attempts_ = attempts;

  SegmentResponse resp;
  try {
    const json body = json::parse(r.body);
    if (body.contains("confidence") && !body["confidence"].is_null()) {
      resp.confidence = body["confidence"].get<double>();
    }
    for (const auto& m : body.at("masks")) {
      resp.masks.push_back(decode_mask_png(base64_decode(m.get<std::string>())));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderRejected, std::string("malformed segmentation response: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ProviderRejected, std::string("malformed segmentation response: ") + e.what());
  }
  return resp;
}

std::shared_ptr<SegmentationProvider> remote_provider(const std::string& endpoint, const std::string& auth_token,
                                                      RemoteOptions opts) {
  return std::make_shared<RemoteSegmenter>(endpoint, auth_token, opts);
}

}  // namespace imagine
