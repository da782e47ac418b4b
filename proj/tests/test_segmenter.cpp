// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <queue>
#include <random>
#include <thread>

#include "imagine/digest.hpp"
#include "imagine/error.hpp"
#include "imagine/png_io.hpp"
#include "imagine/segment3d.hpp"
#include "imagine/segmenter.hpp"
#include "imagine/synth3d.hpp"

// After the Eigen-based headers: <resolv.h> defines _res as a macro.
#include <json.hpp>

#include "mock_server.hpp"

using namespace imagine;
using namespace std::chrono_literals;

namespace {

LabelMap blocks() {
  // Two label-1 blocks that do not touch, a label-2 block and background.
  LabelMap m(40, 30);
  for (int y = 2; y < 10; ++y)
    for (int x = 2; x < 12; ++x) m.set(x, y, 1);
  for (int y = 15; y < 25; ++y)
    for (int x = 25; x < 35; ++x) m.set(x, y, 1);
  for (int y = 12; y < 28; ++y)
    for (int x = 3; x < 15; ++x) m.set(x, y, 2);
  return m;
}

SegmentRequest single(int w, int h, PixelPoint p) {
  SegmentRequest r;
  r.frames = {Image(w, h)};
  r.prompt = p;
  return r;
}

Mask bfs(const LabelMap& m, PixelPoint seed) {
  Mask out(m.width(), m.height());
  const auto id = m.at(seed.x, seed.y);
  if (id == 0) return out;
  std::queue<PixelPoint> q;
  q.push(seed);
  out.set(seed.x, seed.y, true);
  while (!q.empty()) {
    const PixelPoint p = q.front();
    q.pop();
    const PixelPoint n[4] = {{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}};
    for (const auto& v : n) {
      if (v.x < 0 || v.y < 0 || v.x >= m.width() || v.y >= m.height()) continue;
      if (out.at(v.x, v.y) || m.at(v.x, v.y) != id) continue;
      out.set(v.x, v.y, true);
      q.push(v);
    }
  }
  return out;
}

class FixedProvider final : public SegmentationProvider {
 public:
  explicit FixedProvider(SegmentResponse r) : r_(std::move(r)) {}

 private:
  SegmentResponse do_segment(const SegmentRequest&) override { return r_; }
  SegmentResponse r_;
};

RemoteOptions fast() {
  RemoteOptions o;
  o.timeout = 2000ms;
  o.backoff = 1ms;
  return o;
}

}  // namespace

TEST_CASE("request validation") {
  CHECK_THROWS_AS(validate(SegmentRequest{}), Error);
  CHECK_THROWS_AS(validate(single(10, 10, {10, 0})), Error);
  CHECK_THROWS_AS(validate(single(10, 10, {0, -1})), Error);
  CHECK_NOTHROW(validate(single(10, 10, {9, 9})));
}

TEST_CASE("responses must align with the frames") {
  SegmentRequest req = single(8, 8, {1, 1});
  req.mode = SegmentMode::VideoSequence;
  req.frames.push_back(Image(8, 8));
  FixedProvider partial({{Mask(8, 8)}, std::nullopt});
  CHECK_THROWS_WITH_AS(partial.segment(req), doctest::Contains("ProviderRejected"), Error);
  FixedProvider wrong_dims({{Mask(8, 8), Mask(7, 8)}, std::nullopt});
  CHECK_THROWS_AS(wrong_dims.segment(req), Error);
  FixedProvider bad_conf({{Mask(8, 8), Mask(8, 8)}, 1.5});
  CHECK_THROWS_AS(bad_conf.segment(req), Error);
  FixedProvider ok({{Mask(8, 8), Mask(8, 8)}, 0.5});
  CHECK(ok.segment(req).masks.size() == 2);
}

TEST_CASE("instance map oracle") {
  const LabelMap map = blocks();
  auto oracle = oracle_from_instance_map(map);
  SUBCASE("prompt on an instance returns its connected region") {
    const auto r = oracle->segment(single(40, 30, {5, 5}));
    CHECK(r.masks.front().count() == 80);
    CHECK_FALSE(r.masks.front().at(30, 20));  // same id, separate component
  }
  SUBCASE("background is empty") { CHECK_FALSE(oracle->segment(single(40, 30, {38, 1})).masks.front().any()); }
  SUBCASE("two prompts in one instance agree") {
    CHECK(oracle->segment(single(40, 30, {26, 16})).masks == oracle->segment(single(40, 30, {33, 23})).masks);
  }
  SUBCASE("random prompts match a flood fill") {
    std::mt19937 rng(17);
    for (int i = 0; i < 200; ++i) {
      const PixelPoint p{static_cast<int>(rng() % 40), static_cast<int>(rng() % 30)};
      REQUIRE(oracle->segment(single(40, 30, p)).masks.front() == bfs(map, p));
    }
  }
  SUBCASE("video requests repeat the region") {
    SegmentRequest req = single(40, 30, {5, 20});
    req.mode = SegmentMode::VideoSequence;
    req.frames.resize(5, Image(40, 30));
    const auto r = oracle->segment(req);
    REQUIRE(r.masks.size() == 5);
    for (const auto& m : r.masks) CHECK(m == bfs(map, {5, 20}));
  }
  SUBCASE("deterministic") {
    CHECK(oracle->segment(single(40, 30, {5, 5})).masks == oracle->segment(single(40, 30, {5, 5})).masks);
  }
}

TEST_CASE("gaussian label oracle over an orbit") {
  const auto lg = make_two_clusters(2);
  SegConfig cfg;
  const auto orbit = make_orbit(lg.cluster_centers[0], 0.3, cfg);
  SegmentRequest req;
  req.mode = SegmentMode::VideoSequence;
  req.cameras = orbit;
  for (const auto& c : orbit) req.frames.push_back(Image(c.width, c.height));
  req.prompt = {cfg.frame_resolution / 2, cfg.frame_resolution / 2};
  GaussianLabelOracle oracle(lg.scene, lg.labels);
  const auto r = oracle.segment(req);
  REQUIRE(r.masks.size() == 24);

  // Independent projection: front-to-back weights along each pixel ray.
  SegConfig trace_cfg;
  trace_cfg.eps2 = 1e-6;
  const auto project_cluster = [&](const Camera& cam) {
    Mask m(cam.width, cam.height);
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        double w[3] = {0, 0, 0};
        for (const auto& h : trace_ray(lg.scene, cam.pixel_ray(x, y), trace_cfg)) w[lg.labels[h.index]] += h.contribution;
        m.set(x, y, w[1] >= 0.3 && w[1] >= w[2]);
      }
    return m;
  };
  for (std::size_t f = 0; f < orbit.size(); f += 3) {
    const Mask expect = project_cluster(orbit[f]);
    std::size_t agree = 0;
    for (int y = 0; y < expect.height(); ++y)
      for (int x = 0; x < expect.width(); ++x) agree += expect.at(x, y) == r.masks[f].at(x, y);
    CHECK(agree >= static_cast<std::size_t>(0.97 * expect.width() * expect.height()));
    CHECK(r.masks[f].any());
  }
  SegmentRequest no_cams = req;
  no_cams.cameras.clear();
  CHECK_THROWS_AS(oracle.segment(no_cams), Error);
}

TEST_CASE("remote provider wire contract") {
  MockServer mock;
  std::atomic<int> hits{0};
  Mask fixed(16, 12);
  for (int y = 3; y < 9; ++y)
    for (int x = 4; x < 10; ++x) fixed.set(x, y, true);
  std::string seen_auth;
  nlohmann::json seen_request;
  std::size_t seen_frames = 0;

  mock.server.Post("/echo", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_request = nlohmann::json::parse(req.get_file_value("request").content);
    seen_frames = 0;
    for (int i = 0; req.has_file("frame_" + std::to_string(i)); ++i) {
      const auto& f = req.get_file_value("frame_" + std::to_string(i));
      const Image img = decode_png(Bytes(f.content.begin(), f.content.end()));
      if (img.width() == 16 && img.height() == 12) ++seen_frames;
    }
    const Bytes png = encode_mask_png(fixed);
    nlohmann::json body = {{"confidence", 0.75}, {"masks", nlohmann::json::array()}};
    for (std::size_t i = 0; i < seen_frames; ++i) body["masks"].push_back(base64_encode(png));
    res.set_content(body.dump(), "application/json");
  });
  mock.server.Post("/fail", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  mock.server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    nlohmann::json body = {{"masks", {base64_encode(encode_mask_png(fixed))}}};
    res.set_content(body.dump(), "application/json");
  });
  mock.server.Post("/reject", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 422;
  });
  mock.server.Post("/slow", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    std::this_thread::sleep_for(1500ms);
    res.set_content("{}", "application/json");
  });
  mock.server.Post("/garbage", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "application/json");
  });
  mock.server.Post("/extra", [&](const httplib::Request&, httplib::Response& res) {
    const std::string m = base64_encode(encode_mask_png(fixed));
    res.set_content(nlohmann::json{{"masks", {m, m}}}.dump(), "application/json");
  });
  mock.start();

  const SegmentRequest req = single(16, 12, {5, 5});

  SUBCASE("mask comes back verbatim") {
    RemoteSegmenter remote(mock.url("/echo"), "secret-token", fast());
    const auto r = remote.segment(req);
    REQUIRE(r.masks.size() == 1);
    CHECK(r.masks.front() == fixed);
    CHECK(r.confidence == doctest::Approx(0.75));
    CHECK(seen_auth == "Bearer secret-token");
    CHECK(seen_request["mode"] == "single");
    CHECK(seen_request["prompt"]["x"] == 5);
    CHECK(seen_request["num_frames"] == 1);
    CHECK(seen_frames == 1);
  }
  SUBCASE("video request sends every frame") {
    SegmentRequest video = req;
    video.mode = SegmentMode::VideoSequence;
    video.frames.resize(4, Image(16, 12));
    RemoteSegmenter remote(mock.url("/echo"), "", fast());
    CHECK(remote.segment(video).masks.size() == 4);
    CHECK(seen_request["mode"] == "video");
    CHECK(seen_frames == 4);
    CHECK(seen_auth.empty());
  }
  SUBCASE("persistent 500 gives up after three retries") {
    RemoteSegmenter remote(mock.url("/fail"), "", fast());
    CHECK_THROWS_WITH_AS(remote.segment(req), doctest::Contains("ProviderUnavailable"), Error);
    CHECK(hits == 4);
    CHECK(remote.last_attempts() == 4);
  }
  SUBCASE("transient failures are retried") {
    RemoteSegmenter remote(mock.url("/flaky"), "", fast());
    CHECK(remote.segment(req).masks.front() == fixed);
    CHECK(hits == 3);
  }
  SUBCASE("4xx is rejected without retry") {
    RemoteSegmenter remote(mock.url("/reject"), "", fast());
    CHECK_THROWS_WITH_AS(remote.segment(req), doctest::Contains("ProviderRejected"), Error);
    CHECK(hits == 1);
  }
  SUBCASE("slow server times out") {
    RemoteOptions o = fast();
    o.timeout = 300ms;
    RemoteSegmenter remote(mock.url("/slow"), "", o);
    CHECK_THROWS_WITH_AS(remote.segment(req), doctest::Contains("Timeout"), Error);
    CHECK(hits == 1);
  }
  SUBCASE("malformed or partial responses are rejected whole") {
    RemoteSegmenter garbage(mock.url("/garbage"), "", fast());
    CHECK_THROWS_WITH_AS(garbage.segment(req), doctest::Contains("ProviderRejected"), Error);
    RemoteSegmenter extra(mock.url("/extra"), "", fast());
    CHECK_THROWS_WITH_AS(extra.segment(req), doctest::Contains("ProviderRejected"), Error);
  }
  SUBCASE("unreachable endpoint") {
    RemoteSegmenter remote("http://127.0.0.1:1/segment", "", fast());
    CHECK_THROWS_WITH_AS(remote.segment(req), doctest::Contains("ProviderUnavailable"), Error);
  }
}

TEST_CASE("request json") {
  SegmentRequest req = single(4, 4, {1, 2});
  req.cameras = {Camera{}};
  const auto j = nlohmann::json::parse(segment_request_json(req));
  CHECK(j["cameras"].size() == 1);
  CHECK(j["prompt"]["y"] == 2);
}
