// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <deque>
#include <set>

#include "imagine/error.hpp"
#include "imagine/tasks.hpp"

namespace imagine {

namespace {

constexpr Direction kDirections[] = {Direction::Right, Direction::Left, Direction::Down, Direction::Up};

PixelPoint shifted(PixelPoint p, Direction d, int step) {
  const PixelPoint delta = direction_delta(d);
  return {p.x + delta.x * step, p.y + delta.y * step};
}

bool inside(PixelPoint p, int w, int h) { return p.x >= 0 && p.y >= 0 && p.x < w && p.y < h; }

// Breadth-first search over the lattice from + s * (i, j). Returns the first
// move of a shortest path whose first move is not `banned`.
std::optional<Direction> lattice_search(PixelPoint from, int s, std::optional<Direction> banned, int w, int h,
                                        const std::function<bool(PixelPoint)>& goal,
                                        const std::function<bool(PixelPoint)>& allowed) {
  const int i0 = from.x / s;
  const int j0 = from.y / s;
  const int ni = i0 + (w - 1 - from.x) / s + 1;
  const int nj = j0 + (h - 1 - from.y) / s + 1;
  std::vector<signed char> first(static_cast<std::size_t>(ni) * nj, -1);
  auto index = [&](int i, int j) { return static_cast<std::size_t>(j) * ni + i; };
  std::deque<std::pair<int, int>> queue;
  first[index(i0, j0)] = 4;
  queue.emplace_back(i0, j0);
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    const signed char origin = first[index(i, j)];
    for (int k = 0; k < 4; ++k) {
      const Direction d = kDirections[k];
      if (origin == 4 && banned && d == *banned) continue;
      const PixelPoint delta = direction_delta(d);
      const int a = i + delta.x;
      const int b = j + delta.y;
      if (a < 0 || b < 0 || a >= ni || b >= nj || first[index(a, b)] != -1) continue;
      const PixelPoint p{from.x + (a - i0) * s, from.y + (b - j0) * s};
      if (!allowed(p)) continue;
      const signed char f = origin == 4 ? static_cast<signed char>(k) : origin;
      if (goal(p)) return kDirections[f];
      first[index(a, b)] = f;
      queue.emplace_back(a, b);
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Direction> plan_step(PixelPoint from, const StepSchedule& schedule, LayerId target, int width,
                                   int height, const std::function<bool(PixelPoint)>& goal,
                                   const std::function<bool(PixelPoint)>& allowed) {
  if (goal(from)) return std::nullopt;
  const int s = std::max(1, schedule.current);
  std::optional<Direction> last;
  if (schedule.last_direction && schedule.last_target == target) last = schedule.last_direction;
  const std::optional<Direction> banned = last ? std::optional(opposite(*last)) : std::nullopt;

  if (auto d = lattice_search(from, s, banned, width, height, goal, allowed)) return d;
  if (s <= schedule.floor) return std::nullopt;

  // Nothing on this lattice: reverse once to shrink the step.
  if (last) {
    const int smaller = schedule.step_for(*banned, target);
    const PixelPoint p = shifted(from, *banned, smaller);
    if (inside(p, width, height) && allowed(p)) return banned;
  }
  for (Direction d : kDirections) {
    if (banned && d == *banned) continue;
    const PixelPoint p = shifted(from, d, s);
    const PixelPoint back = shifted(p, opposite(d), std::max(schedule.floor, static_cast<int>(s * schedule.decay)));
    if (inside(p, width, height) && allowed(p) && inside(back, width, height) && allowed(back)) return d;
  }
  return std::nullopt;
}

namespace {

std::string move_cmd(Direction d) { return "MOVE " + std::string(1, direction_token(d)); }

const Scene2D& privileged(const Observation& obs) {
  if (!obs.scene) throw Error(ErrorCode::InvalidArgument, "oracle policies need the privileged scene view");
  return *obs.scene;
}

std::function<bool(PixelPoint)> in_canvas(int w, int h) {
  return [w, h](PixelPoint p) { return inside(p, w, h); };
}

// Layer labels that were set aside with IGNORE.
std::set<std::uint32_t> ignored_labels(const Scene2D& scene) {
  std::set<std::uint32_t> out;
  for (const auto& l : scene.layers) {
    if (!l.visible && l.label != 0) out.insert(l.label);
  }
  return out;
}

class CountingOracle final : public Policy {
 public:
  explicit CountingOracle(RunMode mode) : mode_(mode) {}

  std::string decide(const Observation& obs, const ChatRequest&) override {
    const Scene2D& scene = privileged(obs);
    const LabelMap labels = render_labels(scene);
    if (labels.empty()) throw Error(ErrorCode::InvalidArgument, "counting oracle needs instance labels");

    if (obs.mode == Mode::Verify) {
      const std::uint32_t label = scene.pending->candidate.label;
      return label != 0 && !ignored_labels(scene).contains(label) && !scene.pending->reselect ? "ACCEPT" : "REJECT";
    }
    if (obs.mode == Mode::Object) return "IGNORE";

    const bool full = mode_ == RunMode::Full;
    const std::set<std::uint32_t> done = full ? ignored_labels(scene) : visited_;
    const std::uint32_t here = labels.at(scene.cursor.x, scene.cursor.y);
    const bool fresh = here != 0 && !done.contains(here);

    if (fresh) {
      if (full) return "FOCUS";
      visited_.insert(here);
      if (mode_ == RunMode::CursorOnlyWithBoxes) return "BOX";
    }
    const auto& known = full ? done : visited_;
    auto goal = [&](PixelPoint p) {
      const std::uint32_t v = labels.at(p.x, p.y);
      return v != 0 && !known.contains(v);
    };
    const auto d = plan_step(scene.cursor, scene.step, kCursorTarget, scene.width(), scene.height(), goal,
                             in_canvas(scene.width(), scene.height()));
    if (d) return move_cmd(*d);
    return "ANSWER: " + std::to_string(known.size());
  }

  std::string name() const override { return "counting-oracle"; }

 private:
  RunMode mode_;
  std::set<std::uint32_t> visited_;
};

const ObjectLayer* piece_at_slot(const Scene2D& scene, const JigsawPiece& p) {
  for (const auto& l : scene.layers) {
    if (l.visible && l.label == static_cast<std::uint32_t>(p.id) && l.offset == p.slot_offset) return &l;
  }
  return nullptr;
}

class JigsawOracle final : public Policy {
 public:
  explicit JigsawOracle(const JigsawInstance& inst) : inst_(inst) {}

  std::string decide(const Observation& obs, const ChatRequest&) override {
    const Scene2D& scene = privileged(obs);
    std::set<std::uint32_t> open;
    for (const auto& p : inst_.pieces) {
      if (!piece_at_slot(scene, p)) open.insert(static_cast<std::uint32_t>(p.id));
    }

    if (obs.mode == Mode::Verify) {
      return open.contains(scene.pending->candidate.label) ? "ACCEPT" : "REJECT";
    }
    if (obs.mode == Mode::Object) {
      const ObjectLayer* l = scene.find_layer(scene.focus.id);
      const JigsawPiece* piece = find(static_cast<int>(l->label));
      if (!piece) return "RELEASE";
      const PixelPoint c = piece->slot_center;
      auto goal = [&](PixelPoint q) { return std::hypot(q.x - c.x, q.y - c.y) <= inst_.snap_radius; };
      const auto d = plan_step(l->location(), scene.step, l->id, scene.width(), scene.height(), goal,
                               in_canvas(scene.width(), scene.height()));
      return d ? move_cmd(*d) : "RELEASE";
    }

    if (open.empty()) return "ANSWER: done";
    const LabelMap labels = render_labels(scene);
    const std::uint32_t want = *open.begin();
    if (labels.at(scene.cursor.x, scene.cursor.y) == want) return "FOCUS";
    auto goal = [&](PixelPoint q) { return labels.at(q.x, q.y) == want; };
    const auto d = plan_step(scene.cursor, scene.step, kCursorTarget, scene.width(), scene.height(), goal,
                             in_canvas(scene.width(), scene.height()));
    return d ? move_cmd(*d) : "ANSWER: done";
  }

  std::string name() const override { return "jigsaw-oracle"; }

 private:
  const JigsawPiece* find(int id) const {
    for (const auto& p : inst_.pieces) {
      if (p.id == id) return &p;
    }
    return nullptr;
  }

  JigsawInstance inst_;
};

bool in_any_region(const PlacementInstance& inst, PixelPoint p) {
  if (!inside(p, inst.platform.width(), inst.platform.height())) return false;
  for (const auto& r : inst.regions) {
    if (r.at(p.x, p.y)) return true;
  }
  return false;
}

const ObjectLayer* target_layer(const PlacementInstance& inst, const Scene2D& scene) {
  for (const auto& l : scene.layers) {
    if (l.visible && !l.rect && l.label == static_cast<std::uint32_t>(inst.target_id)) return &l;
  }
  return nullptr;
}

class PlacementOracle final : public Policy {
 public:
  explicit PlacementOracle(const PlacementInstance& inst) : inst_(inst) {}

  std::string decide(const Observation& obs, const ChatRequest&) override {
    const Scene2D& scene = privileged(obs);
    const auto target = static_cast<std::uint32_t>(inst_.target_id);
    auto on_platform = [&](PixelPoint p) { return inside(p, scene.width(), scene.height()) && inst_.platform.at(p.x, p.y); };

    if (obs.mode == Mode::Verify) return scene.pending->candidate.label == target ? "ACCEPT" : "REJECT";
    if (obs.mode == Mode::Object) {
      const ObjectLayer* l = scene.find_layer(scene.focus.id);
      auto goal = [&](PixelPoint p) { return in_any_region(inst_, p); };
      const auto d = plan_step(l->location(), scene.step, l->id, scene.width(), scene.height(), goal, on_platform);
      return d ? move_cmd(*d) : "RELEASE";
    }

    if (target_layer(inst_, scene)) return "ANSWER: done";
    const LabelMap labels = render_labels(scene);
    if (labels.at(scene.cursor.x, scene.cursor.y) == target) return "FOCUS";
    auto goal = [&](PixelPoint p) { return labels.at(p.x, p.y) == target; };
    const auto d = plan_step(scene.cursor, scene.step, kCursorTarget, scene.width(), scene.height(), goal,
                             in_canvas(scene.width(), scene.height()));
    return d ? move_cmd(*d) : "ANSWER: done";
  }

  std::string name() const override { return "placement-oracle"; }

 private:
  PlacementInstance inst_;
};

class QaOracle final : public Policy {
 public:
  explicit QaOracle(const QaInstance& inst) : inst_(inst) {}

  std::string decide(const Observation& obs, const ChatRequest&) override {
    if (!inst_.queried_id || obs.mode == Mode::Object) return "ANSWER: " + inst_.truth;
    if (obs.mode == Mode::Verify) return "REJECT";
    const ObjectInfo* info = nullptr;
    for (const auto& o : inst_.objects) {
      if (o.id == *inst_.queried_id) info = &o;
    }
    if (!info || !obs.legal.contains(ActionKind::FocusRect)) return "ANSWER: " + inst_.truth;
    const Rect& b = info->bbox;
    return "RECT " + std::to_string(b.x0) + " " + std::to_string(b.y0) + " " + std::to_string(b.x1 + 1) + " " +
           std::to_string(b.y1 + 1);
  }

  std::string name() const override { return "qa-oracle"; }

 private:
  QaInstance inst_;
};

class PlacementComparator final : public Policy {
 public:
  explicit PlacementComparator(const PlacementInstance& inst) : inst_(inst) {}

  std::string decide(const Observation& obs, const ChatRequest&) override {
    if (obs.compared.size() != 2) throw Error(ErrorCode::InvalidArgument, "comparator needs two candidates");
    auto good = [&](const Scene2D* s) {
      const ObjectLayer* l = target_layer(inst_, *s);
      return l && in_any_region(inst_, l->location());
    };
    return !good(obs.compared[0]) && good(obs.compared[1]) ? "2" : "1";
  }

  std::string name() const override { return "placement-comparator"; }

 private:
  PlacementInstance inst_;
};

}  // namespace

std::unique_ptr<Policy> counting_oracle(RunMode mode) {
  if (mode == RunMode::SamplingTournament) {
    throw Error(ErrorCode::InvalidArgument, "counting has no sampling baseline");
  }
  return std::make_unique<CountingOracle>(mode);
}
std::unique_ptr<Policy> jigsaw_oracle(const JigsawInstance& inst) { return std::make_unique<JigsawOracle>(inst); }
std::unique_ptr<Policy> placement_oracle(const PlacementInstance& inst) {
  return std::make_unique<PlacementOracle>(inst);
}
std::unique_ptr<Policy> qa_oracle(const QaInstance& inst) { return std::make_unique<QaOracle>(inst); }
std::unique_ptr<Policy> placement_comparator(const PlacementInstance& inst) {
  return std::make_unique<PlacementComparator>(inst);
}

}  // namespace imagine
