// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "imagine/error.hpp"
#include "imagine/runtime.hpp"

using namespace imagine;

namespace {

struct Disk {
  int cx, cy, r;
  Rgba color;
};

Scene2D disk_scene(const std::vector<Disk>& disks, int w = 96, int h = 96, std::optional<Mask> region = {}) {
  Image base(w, h, {200, 200, 200, 255});
  LabelMap labels(w, h);
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const Disk& d = disks[i];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if ((x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy) <= d.r * d.r) {
          base.set(x, y, d.color);
          labels.set(x, y, static_cast<std::uint32_t>(i + 1));
        }
      }
    }
  }
  SceneOptions opts;
  opts.inpaint.max_iters = 200;
  return make_scene(std::move(base), std::move(labels), std::move(region), opts);
}

Scene2D three_disks() {
  return disk_scene({{48, 48, 9, {220, 40, 40, 255}}, {20, 20, 7, {40, 40, 220, 255}}, {75, 70, 8, {40, 160, 40, 255}}});
}

EpisodeConfig config(int budget = 50) {
  EpisodeConfig c;
  c.task_plan = "Count the disks by removing them one at a time.";
  c.limits.step_budget = budget;
  return c;
}

// Random replies drawn from every command the grammar knows, plus noise.
std::vector<std::string> random_script(std::mt19937& rng, int n) {
  static const std::vector<std::string> pool = {
      "MOVE a", "MOVE b", "MOVE c", "MOVE d", "FOCUS", "ACCEPT", "REJECT", "IGNORE",
      "RELEASE", "RECT 10,10,40,40", "BOX", "I am thinking.", "d", "MOVE b", "MOVE d"};
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(pool[pick(rng)]);
  out.push_back("ANSWER: done");
  return out;
}

}  // namespace

TEST_CASE("answer on the first step") {
  ScriptedPolicy p({"ANSWER: 0"});
  Episode ep(three_disks(), p, nullptr, config());
  ep.run();
  CHECK(ep.outcome().status == Outcome::Status::Answered);
  CHECK(ep.outcome().answer == "0");
  CHECK(ep.records().size() == 1);
  CHECK(ep.t() == 1);
}

TEST_CASE("three illegal replies end the episode") {
  ScriptedPolicy p({"ACCEPT", "IGNORE", "RELEASE", "ANSWER: 1"});
  Episode ep(three_disks(), p, nullptr, config());
  ep.run();
  CHECK(ep.outcome().status == Outcome::Status::Failed);
  CHECK(ep.outcome().reason == FailureReason::ParseBudgetExceeded);
  CHECK(ep.records().size() == 3);
  CHECK(ep.t() == 0);
  CHECK(ep.scene() == ep.initial_scene());
}

TEST_CASE("a parse failure in between resets the counter") {
  ScriptedPolicy p({"nonsense", "nonsense", "MOVE d", "nonsense", "nonsense", "ANSWER: 2"});
  Episode ep(three_disks(), p, nullptr, config());
  ep.run();
  CHECK(ep.outcome().status == Outcome::Status::Answered);
  CHECK(ep.stats().parse_failures == 4);
}

TEST_CASE("zero budget fails immediately") {
  ScriptedPolicy p({"ANSWER: 0"});
  Episode ep(three_disks(), p, nullptr, config(0));
  ep.run();
  CHECK(ep.outcome().reason == FailureReason::BudgetExhausted);
  CHECK(ep.records().empty());
  CHECK(p.consumed() == 0);
}

TEST_CASE("cursor moves are free, operator actions are not") {
  ScriptedPolicy p({"MOVE a", "MOVE b", "MOVE b", "FOCUS", "REJECT", "ANSWER: x"});
  Episode ep(three_disks(), p, nullptr, config(2));
  ep.run();
  CHECK(ep.outcome().reason == FailureReason::BudgetExhausted);
  CHECK(ep.t() == 2);
  CHECK(p.consumed() == 5);
}

TEST_CASE("policy call cap") {
  FunctionPolicy p("mover", [](const Observation&) { return std::string("MOVE a"); });
  EpisodeConfig c = config();
  c.limits.max_policy_calls = 30;
  Episode ep(three_disks(), p, nullptr, c);
  ep.run();
  CHECK(ep.outcome().reason == FailureReason::BudgetExhausted);
  CHECK(ep.stats().policy_calls == 30);
}

TEST_CASE("focus, accept, ignore on a disk") {
  // Cursor starts on the centre disk.
  ScriptedPolicy p({"FOCUS", "ACCEPT", "IGNORE", "ANSWER: 1"});
  Episode ep(three_disks(), p, nullptr, config());
  ep.run();
  REQUIRE(ep.outcome().status == Outcome::Status::Answered);
  const auto& r = ep.records();
  REQUIRE(r.size() == 4);
  CHECK(r[0].event.kind == "focus_candidate");
  CHECK(r[1].mode == Mode::Verify);
  CHECK(r[1].event.kind == "accepted");
  CHECK(r[2].mode == Mode::Object);
  CHECK(r[2].event.kind == "ignored");
  CHECK(r[3].mode == Mode::Cursor);
  CHECK(ep.scene().layers.size() == 1);
  CHECK_FALSE(ep.scene().layers[0].visible);
  CHECK(ep.scene().layers[0].label == 1);
  CHECK(r[2].base_digest != r[0].base_digest);
  CHECK(ep.stats().focus_steps == 1);
}

TEST_CASE("focus on background is a non-mutating event") {
  ScriptedPolicy p({"MOVE c", "MOVE c", "MOVE a", "FOCUS", "ANSWER: 0"});
  Scene2D s = three_disks();
  Episode ep(s, p, nullptr, config());
  ep.run();
  REQUIRE(ep.records().size() == 5);
  CHECK(ep.records()[3].event.kind == "focus_failed");
  CHECK(ep.records()[4].render_digest == ep.records()[3].render_digest);
}

TEST_CASE("non-mutating records leave the render unchanged") {
  std::mt19937 rng(11);
  for (int e = 0; e < 10; ++e) {
    ScriptedPolicy p(random_script(rng, 40));
    Episode ep(three_disks(), p, nullptr, config(200));
    ep.run();
    const auto& r = ep.records();
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      if (!r[i].event.mutated) CHECK(r[i + 1].render_digest == r[i].render_digest);
    }
  }
}

TEST_CASE("trace replay reproduces every render") {
  std::mt19937 rng(2026);
  int mutations = 0;
  for (int e = 0; e < 20; ++e) {
    ScriptedPolicy p(random_script(rng, 30));
    EpisodeConfig c = config(200);
    c.allow_rect = e % 2 == 0;
    Episode ep(three_disks(), p, nullptr, c);
    ep.run();
    for (const auto& r : ep.records()) mutations += r.event.mutated;
    const ReplayResult rr = replay(ep.initial_scene(), ep.records(), nullptr);
    CHECK(rr.ok);
    CHECK(rr.checked == ep.records().size());
    CHECK(rr.final_scene == ep.scene());
  }
  CHECK(mutations > 100);
}

TEST_CASE("tampered trace is detected") {
  ScriptedPolicy p({"MOVE d", "MOVE d", "FOCUS", "ACCEPT", "ANSWER: 1"});
  Episode ep(three_disks(), p, nullptr, config());
  ep.run();
  auto records = ep.records();
  records[1].action = Action::move_cursor(Direction::Up);
  const ReplayResult rr = replay(ep.initial_scene(), records, nullptr);
  CHECK_FALSE(rr.ok);
  CHECK(rr.first_mismatch == 2);
}

TEST_CASE("requests carry at most two images and a growing transcript") {
  std::mt19937 rng(3);
  ScriptedPolicy p(random_script(rng, 25));
  Episode ep(three_disks(), p, nullptr, config(200));
  std::vector<ChatRequest> seen;
  ep.on_request = [&](const ChatRequest& r) { seen.push_back(r); };
  ep.run();
  REQUIRE(seen.size() == ep.records().size());
  CHECK(seen.front().image_count() == 1);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    CHECK(seen[i].image_count() <= kMaxImagesPerRequest);
    if (i == 0) continue;
    // Transcript messages sit between the system prompt and the final turn.
    const auto& prev = seen[i - 1].messages;
    const auto& cur = seen[i].messages;
    REQUIRE(cur.size() == prev.size() + 2);
    for (std::size_t m = 1; m + 1 < prev.size(); ++m) CHECK(cur[m].parts[0].text == prev[m].parts[0].text);
    // Previous image of this request is the current image of the last one.
    CHECK(cur.back().parts[1].image.digest == prev.back().parts[prev.back().parts.size() - 2].image.digest);
  }
}

TEST_CASE("cursor-only mode never changes the base") {
  std::mt19937 rng(4);
  for (RunMode mode : {RunMode::CursorOnly, RunMode::CursorOnlyWithBoxes}) {
    ScriptedPolicy p(random_script(rng, 60));
    EpisodeConfig c = config(200);
    c.run_mode = mode;
    Episode ep(three_disks(), p, nullptr, c);
    ep.run();
    for (const auto& r : ep.records()) {
      CHECK(r.base_digest == ep.records().front().base_digest);
      CHECK(r.mode == Mode::Cursor);
      if (r.action) {
        const bool allowed = r.action->kind == ActionKind::MoveCursor || r.action->kind == ActionKind::Answer ||
                             (mode == RunMode::CursorOnlyWithBoxes && r.action->kind == ActionKind::DrawBox);
        CHECK(allowed);
      }
    }
    CHECK(ep.scene().layers.empty());
  }
}

TEST_CASE("focus budget counts focus steps") {
  ScriptedPolicy p({"FOCUS", "REJECT", "FOCUS", "REJECT", "FOCUS", "ANSWER: 0"});
  EpisodeConfig c = config();
  c.limits.focus_budget = 2;
  Episode ep(three_disks(), p, nullptr, c);
  ep.run();
  CHECK(ep.outcome().reason == FailureReason::BudgetExhausted);
  CHECK(ep.stats().focus_steps == 2);
  CHECK(ep.records().back().event.kind == "budget_exhausted");
  CHECK_FALSE(ep.records().back().applied);
  CHECK(replay(ep.initial_scene(), ep.records(), nullptr).ok);
}

namespace {

class DownProvider final : public SegmentationProvider {
  SegmentResponse do_segment(const SegmentRequest&) override {
    throw Error(ErrorCode::ProviderUnavailable, "connection refused");
  }
};

class FailingPolicy final : public Policy {
 public:
  std::string decide(const Observation&, const ChatRequest&) override {
    throw Error(ErrorCode::Timeout, "no reply");
  }
  std::string name() const override { return "failing"; }
};

class StopAfter final : public TaskHooks {
 public:
  explicit StopAfter(int n) : left_(n) {}
  std::optional<std::string> after_action(const Action& a, Scene2D&, SceneEvent& ev) override {
    if (a.kind != ActionKind::MoveCursor) return std::nullopt;
    ev.detail += " (counted)";
    if (--left_ == 0) return std::string("move quota reached");
    return std::nullopt;
  }

 private:
  int left_;
};

}  // namespace

TEST_CASE("provider failures become ProviderFailure outcomes") {
  {
    ScriptedPolicy p({"FOCUS", "ANSWER: 0"});
    Episode ep(three_disks(), p, std::make_shared<DownProvider>(), config());
    ep.run();
    CHECK(ep.outcome().reason == FailureReason::ProviderFailure);
    CHECK(ep.scene() == ep.initial_scene());
  }
  {
    FailingPolicy p;
    Episode ep(three_disks(), p, nullptr, config());
    ep.run();
    CHECK(ep.outcome().reason == FailureReason::ProviderFailure);
  }
  {
    ScriptedPolicy p({"MOVE a"});
    Episode ep(three_disks(), p, nullptr, config());
    ep.run();
    CHECK(ep.outcome().reason == FailureReason::BudgetExhausted);
  }
}

TEST_CASE("task hooks annotate events and can stop the episode") {
  ScriptedPolicy p({"MOVE a", "MOVE b", "MOVE c", "MOVE d", "ANSWER: 0"});
  Episode ep(three_disks(), p, nullptr, config(), std::make_unique<StopAfter>(3));
  ep.run();
  CHECK(ep.outcome().reason == FailureReason::BudgetExhausted);
  CHECK(ep.outcome().detail == "move quota reached");
  CHECK(ep.records().size() == 3);
  CHECK(ep.records()[0].event.detail.find("(counted)") != std::string::npos);
}

TEST_CASE("trace files round-trip and never contain secrets") {
  const auto dir = std::filesystem::temp_directory_path() / "imagine_trace_test";
  std::filesystem::remove_all(dir);
  const std::string secret = "sk-test-0123456789";
  ScriptedPolicy p({"FOCUS", "ACCEPT", "MOVE d", "RELEASE", "I refuse to say " + secret, "ANSWER: 1"});
  EpisodeConfig c = config();
  c.log_requests = true;
  Episode ep(three_disks(), p, nullptr, c);
  ep.run();
  write_trace(ep, dir / "trace.jsonl", dir / "images", R"({"task":"test","instance":"disks"})", {secret});

  std::ifstream in(dir / "trace.jsonl");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find(secret) == std::string::npos);
  CHECK(ss.str().find("[REDACTED]") != std::string::npos);

  const LoadedTrace t = read_trace(dir / "trace.jsonl");
  REQUIRE(t.records.size() == ep.records().size());
  CHECK(t.outcome.status == Outcome::Status::Answered);
  CHECK(t.outcome.answer == "1");
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    CHECK(t.records[i].render_digest == ep.records()[i].render_digest);
    CHECK(t.records[i].action == ep.records()[i].action);
    CHECK(t.records[i].applied == ep.records()[i].applied);
    CHECK(std::filesystem::exists(dir / "images" / (t.records[i].render_digest + ".png")));
  }
  CHECK(replay(ep.initial_scene(), t.records, nullptr).ok);

  std::ofstream(dir / "bad.jsonl") << R"({"type":"header","schema":"other","version":1})" << '\n';
  CHECK_THROWS_AS(read_trace(dir / "bad.jsonl"), Error);
  std::filesystem::remove_all(dir);
}

// ---- tournament and sweep --------------------------------------------------

namespace {

// Candidate i is the scene with the cursor at x = 10 + 8 i.
std::vector<Scene2D> cursor_candidates(int n) {
  std::vector<Scene2D> out;
  for (int i = 0; i < n; ++i) {
    Scene2D s = three_disks();
    s.cursor = {10 + 8 * i, 80};
    out.push_back(s);
  }
  return out;
}

FunctionPolicy oracle_comparator(PixelPoint truth) {
  return FunctionPolicy("oracle-comparator", [truth](const Observation& obs) {
    REQUIRE(obs.compared.size() == 2);
    return obs.compared[0]->cursor == truth ? std::string("Left one: 1") : std::string("I pick 2");
  });
}

}  // namespace

TEST_CASE("tournament structure") {
  auto cands = cursor_candidates(1);
  auto cmp = oracle_comparator({0, 0});
  const auto one = run_sampling_tournament(cands, cmp, "Pick the best.");
  CHECK(one.winner == 0);
  CHECK(one.bracket.empty());

  for (int n : {2, 3, 5, 8, 13}) {
    const auto r = run_sampling_tournament(cursor_candidates(n), cmp, "Pick the best.");
    CHECK(r.bracket.size() == static_cast<std::size_t>(n - 1));
    CHECK(r.max_images_per_request == 1);
  }
  CHECK_THROWS_AS(run_sampling_tournament({}, cmp, "x"), Error);
}

TEST_CASE("oracle comparator finds the truth in any bracket") {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto cands = cursor_candidates(8);
    std::shuffle(cands.begin(), cands.end(), rng);
    const PixelPoint truth{10 + 8 * 5, 80};
    auto cmp = oracle_comparator(truth);
    const auto r = run_sampling_tournament(cands, cmp, "Pick the best.");
    CHECK(r.bracket.size() == 7);
    CHECK(cands[r.winner].cursor == truth);
  }
}

TEST_CASE("comparator reply parsing") {
  CHECK(parse_choice("2") == 2);
  CHECK(parse_choice("Candidate 1 is closer, so 2? No: 1.") == 1);
  CHECK_FALSE(parse_choice("12 or 21"));
  CHECK_FALSE(parse_choice("neither"));
  auto cands = cursor_candidates(2);
  FunctionPolicy mute("mute", [](const Observation&) { return std::string("hmm"); });
  const auto r = run_sampling_tournament(cands, mute, "x");
  REQUIRE(r.failure);
  CHECK(r.failure->reason == FailureReason::ParseBudgetExceeded);
}

TEST_CASE("step budget sweep") {
  const std::vector<int> needs = {0, 2, 3, 3, 7};
  auto solve = [&](std::size_t i, int b) { return b >= needs[i]; };
  const auto rows = step_budget_sweep(needs.size(), {0, 1, 3, 7, 10}, solve);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].solvable_rate == doctest::Approx(0.2));
  CHECK(rows[2].solved == 4);
  CHECK(rows[3].solvable_rate == 1.0);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].solvable_rate >= rows[i - 1].solvable_rate);
  CHECK_THROWS_AS(step_budget_sweep(1, {3, 1}, solve), Error);
}
