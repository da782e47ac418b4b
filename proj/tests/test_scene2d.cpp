// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "imagine/error.hpp"
#include "imagine/png_io.hpp"
#include "imagine/scene2d.hpp"

using namespace imagine;

namespace {

constexpr Rgba kBackground{60, 90, 120, 255};

struct Disk {
  int cx, cy, r;
  Rgba color;
};

const std::vector<Disk> kDisks = {
    {30, 30, 10, {220, 40, 40, 255}},
    {90, 40, 12, {40, 200, 60, 255}},
    {60, 95, 14, {250, 220, 30, 255}},
};

struct Fixture {
  Image base;
  LabelMap labels;
};

Fixture make_fixture(int size = 128) {
  Fixture f{Image(size, size, kBackground), LabelMap(size, size)};
  for (std::size_t i = 0; i < kDisks.size(); ++i) {
    const Disk& d = kDisks[i];
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        if ((x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy) <= d.r * d.r) {
          f.base.set(x, y, d.color);
          f.labels.set(x, y, static_cast<std::uint32_t>(i + 1));
        }
  }
  return f;
}

Scene2D fixture_scene(SceneOptions opts = {}) {
  Fixture f = make_fixture();
  return make_scene(std::move(f.base), std::move(f.labels), std::nullopt, opts);
}

Scene2D with_cursor(Scene2D s, PixelPoint p) {
  s.cursor = p;
  return s;
}

FocusRequestResult focus_at(const Scene2D& s, PixelPoint p) {
  auto provider = oracle_from_instance_map(render_labels(s));
  return request_focus(with_cursor(s, p), *provider);
}

Scene2D lift(const Scene2D& s, PixelPoint p) { return accept_focus(focus_at(s, p).scene); }

std::size_t diff_count(const Image& a, const Image& b) {
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) n += a.at(x, y) != b.at(x, y);
  return n;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("direction tokens") {
  for (Direction d : {Direction::Up, Direction::Down, Direction::Left, Direction::Right}) {
    CHECK(direction_from_token(direction_token(d)) == d);
    CHECK(opposite(opposite(d)) == d);
  }
  CHECK(direction_token(Direction::Up) == 'a');
  CHECK(direction_token(Direction::Right) == 'd');
  CHECK_FALSE(direction_from_token('e').has_value());
}

TEST_CASE("render") {
  const Scene2D s = fixture_scene();
  SUBCASE("without layers the clean render is the base") { CHECK(render_clean(s) == s.base); }
  SUBCASE("deterministic") { CHECK(render(s) == render(s)); }
  SUBCASE("cursor glyph is the only difference") {
    CHECK(diff_count(render(s), s.base) == diff_count(draw_cursor(s.base, s.cursor), s.base));
  }
  SUBCASE("hidden layer renders like a scene without it") {
    Scene2D lifted = lift(s, {30, 30});
    Scene2D hidden = lifted;
    hidden.layers.front().visible = false;
    Scene2D without = lifted;
    without.layers.clear();
    CHECK(render_clean(hidden) == render_clean(without));
  }
}

TEST_CASE("move_cursor") {
  SceneOptions opts;
  opts.step_initial = 64;
  Fixture f = make_fixture(512);
  const Scene2D s = make_scene(f.base, f.labels, std::nullopt, opts);
  REQUIRE(s.cursor == PixelPoint{256, 256});
  REQUIRE(s.step.current == 64);

  SUBCASE("moves by the current step") {
    const Scene2D m = move_cursor(s, Direction::Right);
    CHECK(m.cursor == PixelPoint{320, 256});
    CHECK(s.cursor == PixelPoint{256, 256});
  }
  SUBCASE("clamps at the edge") {
    const Scene2D m = move_cursor(with_cursor(s, {0, 100}), Direction::Left);
    CHECK(m.cursor == PixelPoint{0, 100});
  }
  SUBCASE("scripted trajectory under decay 0.8") {
    opts.step_decay = 0.8;
    Scene2D m = make_scene(f.base, f.labels, std::nullopt, opts);
    using D = Direction;
    for (D d : {D::Right, D::Right, D::Left, D::Right, D::Left, D::Left, D::Right, D::Right}) m = move_cursor(m, d);
    // Hand simulation: steps 64, 64, 51, 40, 32, 32, 25, 25.
    CHECK(m.cursor == PixelPoint{359, 256});
    CHECK(m.step.current == 25);
    CHECK(m.step.moves_taken == 8);
  }
  SUBCASE("needs cursor focus") {
    const Scene2D lifted = lift(s, {30, 30});
    CHECK(code_of([&] { move_cursor(lifted, Direction::Up); }) == ErrorCode::WrongFocus);
  }
}

TEST_CASE("step schedule") {
  const StepSchedule s = StepSchedule::for_canvas(512, 384);
  CHECK(s.initial == 48);
  CHECK(StepSchedule::for_canvas(10, 10).initial == 2);
  CHECK_THROWS_AS(StepSchedule::for_canvas(100, 100, 0.0), Error);
  std::mt19937 rng(4);
  StepSchedule cur = s;
  for (int i = 0; i < 500; ++i) {
    const auto d = static_cast<Direction>(rng() % 4);
    const LayerId target = static_cast<LayerId>(rng() % 3);
    const StepSchedule n = cur.advanced(d, target);
    REQUIRE(n.current <= cur.current);
    REQUIRE(n.current >= n.floor);
    cur = n;
  }
  CHECK(cur.current == cur.floor);
}

TEST_CASE("request_focus") {
  const Scene2D s = fixture_scene();
  Fixture f = make_fixture();
  SUBCASE("oracle mask equals the ground-truth disk") {
    const auto r = focus_at(s, {90, 40});
    REQUIRE(r.scene.pending);
    CHECK(r.scene.focus.kind == FocusTarget::Kind::Pending);
    CHECK(r.scene.pending->candidate.canvas_mask(128, 128) == f.labels.region(2));
    CHECK(r.scene.pending->candidate.label == 2);
    CHECK(r.preview != render_clean(s));
  }
  SUBCASE("background yields SegmentationFailed") {
    const Scene2D before = with_cursor(s, {5, 120});
    auto provider = oracle_from_instance_map(render_labels(before));
    CHECK(code_of([&] { request_focus(before, *provider); }) == ErrorCode::SegmentationFailed);
    CHECK(before == with_cursor(s, {5, 120}));
  }
  SUBCASE("second request without verdict is refused") {
    const auto r = focus_at(s, {30, 30});
    auto provider = oracle_from_instance_map(render_labels(r.scene));
    CHECK(code_of([&] { request_focus(r.scene, *provider); }) == ErrorCode::WrongFocus);
  }
}

TEST_CASE("accept and reject") {
  const Scene2D s = with_cursor(fixture_scene(), {60, 95});
  const auto r = focus_at(s, {60, 95});
  SUBCASE("reject restores the previous render") {
    const Scene2D back = reject_focus(r.scene);
    CHECK(render(back) == render(s));
    CHECK(back.focus == FocusTarget::cursor());
  }
  SUBCASE("accept changes at most the dilation ring") {
    const Scene2D acc = accept_focus(r.scene);
    CHECK(acc.focus == FocusTarget::object(1));
    const Mask obj = acc.layers.front().canvas_mask(128, 128);
    const Mask ring = mask_dilate(obj, s.options.dilation);
    const Image before = render_clean(s);
    const Image after = render_clean(acc);
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x)
        if (before.at(x, y) != after.at(x, y)) REQUIRE((ring.at(x, y) && !obj.at(x, y)));
  }
  SUBCASE("accept then ignore removes the object") {
    const Scene2D gone = ignore(accept_focus(r.scene));
    const Image img = render_clean(gone);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(img.at(60, 95)[c] - kBackground[c]) <= 1);
    CHECK(gone.focus == FocusTarget::cursor());
    CHECK(gone.layers.size() == 1);
    CHECK_FALSE(gone.layers.front().visible);
  }
  SUBCASE("verdicts need a pending focus") {
    CHECK(code_of([&] { accept_focus(s); }) == ErrorCode::WrongFocus);
    CHECK(code_of([&] { reject_focus(s); }) == ErrorCode::WrongFocus);
  }
}

TEST_CASE("ignore") {
  const Scene2D s = fixture_scene();
  SUBCASE("refocusing an ignored object finds the fill") {
    const Scene2D gone = ignore(lift(s, {30, 30}));
    auto provider = oracle_from_instance_map(render_labels(with_cursor(gone, {30, 30})));
    CHECK(code_of([&] { request_focus(with_cursor(gone, {30, 30}), *provider); }) ==
          ErrorCode::SegmentationFailed);
  }
  SUBCASE("ignoring every object leaves the background") {
    Scene2D cur = s;
    for (const Disk& d : kDisks) cur = ignore(lift(cur, {d.cx, d.cy}));
    const Image img = render_clean(cur);
    const Image reference(128, 128, kBackground);
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x)
        for (int c = 0; c < 4; ++c) REQUIRE(std::abs(img.at(x, y)[c] - reference.at(x, y)[c]) <= 1);
  }
  SUBCASE("needs an object focus") { CHECK(code_of([&] { ignore(s); }) == ErrorCode::WrongFocus); }
}

TEST_CASE("move_object") {
  SceneOptions opts;
  opts.step_initial = 32;
  const Scene2D s = fixture_scene(opts);
  const Scene2D lifted = lift(s, {60, 95});
  SUBCASE("moves the offset by the step") {
    const MoveResult m = move_object(lift(s, {30, 30}), Direction::Down);
    CHECK_FALSE(m.refused);
    const ObjectLayer& l = m.scene.layers.front();
    CHECK(l.offset.y == l.origin.y + 32);
    CHECK(l.offset.x == l.origin.x);
  }
  SUBCASE("region boundary refuses the move") {
    Mask region(128, 128);
    for (int y = 80; y < 110; ++y)
      for (int x = 0; x < 128; ++x) region.set(x, y, true);
    Scene2D constrained = lifted;
    constrained.region_mask = region;
    const MoveResult m = move_object(constrained, Direction::Up);
    CHECK(m.refused);
    CHECK(m.scene == constrained);
    const MoveResult ok = move_object(constrained, Direction::Right);
    CHECK_FALSE(ok.refused);
  }
  SUBCASE("leaving the canvas is refused") {
    const MoveResult m = move_object(move_object(lifted, Direction::Down).scene, Direction::Down);
    CHECK(m.refused);
  }
  SUBCASE("right then left with constant step restores the render") {
    SceneOptions flat = opts;
    flat.step_decay = 1.0;
    const Scene2D start = lift(fixture_scene(flat), {60, 95});
    const Scene2D back = move_object(move_object(start, Direction::Right).scene, Direction::Left).scene;
    CHECK(render(back) == render(start));
  }
  SUBCASE("needs an object focus") {
    CHECK(code_of([&] { move_object(s, Direction::Up); }) == ErrorCode::WrongFocus);
  }
}

TEST_CASE("release_object") {
  const Scene2D s = fixture_scene();
  const Scene2D moved = move_object(lift(s, {30, 30}), Direction::Right).scene;
  const Scene2D rel = release_object(moved);
  SUBCASE("only the cursor glyph reappears") {
    CHECK(render(moved) == render_clean(rel));
    CHECK(render(rel) == draw_cursor(render_clean(rel), rel.cursor));
    CHECK(rel.layers.front().visible);
  }
  SUBCASE("releasing twice is refused") {
    CHECK(code_of([&] { release_object(rel); }) == ErrorCode::WrongFocus);
  }
  SUBCASE("refocusing the moved object picks the same layer") {
    const PixelPoint at = rel.layers.front().location();
    const auto r = focus_at(rel, at);
    REQUIRE(r.scene.pending);
    CHECK(r.scene.pending->reselect);
    CHECK(r.scene.pending->candidate.id == rel.layers.front().id);
    const Scene2D again = accept_focus(r.scene);
    CHECK(again.layers.size() == 1);
    CHECK(again.focus == FocusTarget::object(rel.layers.front().id));
    CHECK(again.base == rel.base);
  }
}

TEST_CASE("focus_rect") {
  const Scene2D s = fixture_scene();
  SUBCASE("full canvas") {
    const Scene2D r = focus_rect(s, {0, 0}, {128, 128});
    CHECK(r.layers.front().image == render_clean(s));
    CHECK(r.focus.kind == FocusTarget::Kind::Object);
  }
  SUBCASE("10x10 block") {
    const Scene2D r = focus_rect(s, {10, 10}, {20, 20});
    const Mask m = r.layers.front().canvas_mask(128, 128);
    CHECK(m.count() == 100);
    for (int y = 10; y < 20; ++y)
      for (int x = 10; x < 20; ++x) CHECK(m.at(x, y));
  }
  SUBCASE("crop render equals a direct slice") {
    const Scene2D r = focus_rect(s, {17, 22}, {75, 50});
    const Image crop = render_focus_crop(r);
    REQUIRE(crop.width() == 58);
    REQUIRE(crop.height() == 28);
    for (int y = 0; y < 28; ++y)
      for (int x = 0; x < 58; ++x) REQUIRE(crop.at(x, y) == s.base.at(17 + x, 22 + y));
    CHECK(render_view(r) == crop);
  }
  SUBCASE("degenerate") {
    CHECK(code_of([&] { focus_rect(s, {10, 10}, {10, 20}); }) == ErrorCode::DegenerateRect);
    CHECK(code_of([&] { focus_rect(s, {20, 10}, {10, 20}); }) == ErrorCode::DegenerateRect);
  }
}

TEST_CASE("random action sequences respect the state machine and pixel locality") {
  std::mt19937 rng(2026);
  const Image original = fixture_scene().base;
  for (int episode = 0; episode < 30; ++episode) {
    Scene2D s = fixture_scene();
    Mask touched = cursor_support(128, 128, s.cursor);
    for (int step = 0; step < 40; ++step) {
      const Scene2D before = s;
      const int op = static_cast<int>(rng() % 8);
      const auto dir = static_cast<Direction>(rng() % 4);
      bool legal = true;
      try {
        switch (op) {
          case 0: s = move_cursor(s, dir); break;
          case 1: {
            if (rng() % 2 == 0) s = with_cursor(s, {kDisks[rng() % 3].cx, kDisks[rng() % 3].cy});
            auto provider = oracle_from_instance_map(render_labels(s));
            s = request_focus(s, *provider).scene;
            break;
          }
          case 2: s = accept_focus(s); break;
          case 3: s = reject_focus(s); break;
          case 4: s = ignore(s); break;
          case 5: s = move_object(s, dir).scene; break;
          case 6: s = release_object(s); break;
          default: s = move_cursor(s, dir); break;
        }
      } catch (const Error& e) {
        legal = false;
        REQUIRE((e.code() == ErrorCode::WrongFocus || e.code() == ErrorCode::SegmentationFailed));
        s = before;  // operations take their input by const reference
      }
      using K = FocusTarget::Kind;
      if (legal && !(s == before)) {
        const K from = before.focus.kind;
        const K to = s.focus.kind;
        const bool ok = (from == K::Cursor && (to == K::Cursor || to == K::Pending)) ||
                        (from == K::Pending && (to == K::Object || to == K::Cursor)) ||
                        (from == K::Object && (to == K::Object || to == K::Cursor));
        REQUIRE(ok);
      }
      REQUIRE(s.step.current <= before.step.current);
      REQUIRE(s.step.current >= s.step.floor);
      REQUIRE(s.pending.has_value() == (s.focus.kind == FocusTarget::Kind::Pending));
      if (s.focus.kind == FocusTarget::Kind::Object) {
        const ObjectLayer* l = s.find_layer(s.focus.id);
        REQUIRE(l);
        REQUIRE(l->visible);
      }

      touched = mask_union(touched, cursor_support(128, 128, s.cursor));
      for (const auto& l : s.layers) touched = mask_union(touched, mask_dilate(l.canvas_mask(128, 128), 2));
      const Image img = render(s);
      for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x)
          if (!touched.at(x, y)) REQUIRE(img.at(x, y) == original.at(x, y));
    }
  }
}

TEST_CASE("scene descriptor round trip") {
  SceneDescriptor d;
  d.width = 128;
  d.height = 128;
  d.base_image = "base.png";
  d.instance_map = "labels.png";
  d.objects = {{1, "masks/1.png", "circle"}, {2, "masks/2.png", "square"}};
  CHECK(scene_descriptor_from_json(to_json(d)) == d);
  CHECK_THROWS_AS(scene_descriptor_from_json("{\"width\": 3}"), Error);

  const auto dir = std::filesystem::temp_directory_path() / "imagine_scene_descriptor";
  Fixture f = make_fixture();
  write_png(dir / "base.png", f.base);
  write_file(dir / "labels.png", encode_label_png(f.labels));
  const Scene2D s = load_scene(d, dir);
  CHECK(s.base == f.base);
  CHECK(s.labels == f.labels);
  std::filesystem::remove_all(dir);
}
