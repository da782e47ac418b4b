// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "imagine/error.hpp"
#include "imagine/segment3d.hpp"
#include "imagine/synth3d.hpp"
#include "imagine/tasks.hpp"

using namespace imagine;

namespace {

// Pinned tolerances and limits.
constexpr double kCountingSeconds = 300.0;
constexpr double kTwoClusterSeconds = 120.0;
constexpr double kChainTolerance = 1e-9;
constexpr double kMassFraction = 0.95;
constexpr int kInpaintTolerance = 1;  // 1/255 per channel

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Largest image count in any policy request across all runs below.
std::size_t g_max_images = 0;

void fail(Verdict& v, const std::string& why) {
  if (v.pass) v.detail = why;
  v.pass = false;
}

struct Run {
  std::unique_ptr<Policy> policy;
  std::unique_ptr<Episode> episode;
};

Run run_oracle(const TaskInstance& inst, RunMode mode = RunMode::Full, std::optional<int> focus_budget = {}) {
  TaskEpisodeSetup s = episode_setup(inst, mode);
  s.config.limits.focus_budget = focus_budget;
  s.config.keep_images = false;
  Run r;
  r.policy = oracle_for(inst, mode);
  r.episode = std::make_unique<Episode>(s.scene, *r.policy, nullptr, s.config, s.hooks ? s.hooks() : nullptr);
  r.episode->on_request = [](const ChatRequest& req) { g_max_images = std::max(g_max_images, req.image_count()); };
  r.episode->run();
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

// ---- 1 ---------------------------------------------------------------------

Verdict counting_e2e() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::optional<int>> preds;
  std::vector<int> truths;
  for (int n : {2, 5, 10, 15, 20, 30}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const TaskInstance inst = gen_counting(seed, n);
      Run r = run_oracle(inst);
      const EpisodeScore s = score_episode(inst, *r.episode);
      preds.push_back(s.predicted);
      truths.push_back(n);
      if (!s.correct) fail(v, "N=" + std::to_string(n) + " seed=" + std::to_string(seed) + ": " + r.episode->outcome().detail);
    }
  }
  const CountingMetrics m = score_counting(preds, truths);
  const double secs = seconds_since(t0);
  if (m.success_rate != 1.0 || m.mean_error != 0.0 || m.variance != 0.0) fail(v, "metrics off");
  if (secs > kCountingSeconds) fail(v, "took " + fmt(secs, 1) + " s");
  v.detail = std::to_string(m.n) + " instances, success " + fmt(m.success_rate) + ", mean error " +
             fmt(m.mean_error) + ", variance " + fmt(m.variance) + ", " + fmt(secs, 1) + " s" +
             (v.pass ? "" : " (" + v.detail + ")");
  return v;
}

// ---- 2 ---------------------------------------------------------------------

Gaussian3D blob(Vec3 c, double s, double opacity) {
  Gaussian3D g;
  g.center = c;
  g.scale = Vec3::Constant(s);
  g.opacity = opacity;
  g.color = Vec3::Ones();
  return g;
}

Verdict ray_micro_oracle() {
  Verdict v;
  Camera cam;
  cam.position = Vec3(0, 0, 0);
  cam.look_at = Vec3(0, 0, -1);
  cam.up = Vec3(0, 1, 0);
  cam.vertical_fov = 0.8;
  cam.width = cam.height = 33;
  SegConfig cfg;
  cfg.eps1 = 0.2;
  cfg.eps2 = 0.01;
  const GaussianScene line{{blob({0, 0, -2}, 0.2, 0.5), blob({0, 0, -3}, 0.2, 0.5), blob({0, 0, -4}, 0.2, 0.5)}};
  Mask center(33, 33);
  center.set(16, 16, true);
  Votes votes;
  ray_vote(line, cam, center, cfg, votes);
  if (votes != Votes{1, 1, 0}) fail(v, "collinear votes differ from {1,1,0}");

  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> pos(0.05, 0.95);
  GaussianScene s;
  for (int i = 0; i < 60; ++i) {
    Gaussian3D g = blob({u(rng), u(rng), u(rng)}, 0.1, pos(rng));
    g.scale = Vec3(0.05 + 0.3 * pos(rng), 0.05 + 0.3 * pos(rng), 0.05 + 0.3 * pos(rng));
    g.rotation = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
    s.gaussians.push_back(g);
  }
  const SegConfig plain;
  double worst = 0;
  for (int r = 0; r < 1000 && v.pass; ++r) {
    const Vec3 origin = 3.0 * Vec3(u(rng), u(rng), u(rng)).normalized();
    const Vec3 target(0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng));
    const Ray ray{origin, (target - origin).normalized()};
    const auto hits = trace_ray(s, ray, plain);
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double t = 0;
      const double a = ray_alpha(s.gaussians[i], ray, &t);
      if (t > 0 && a > plain.alpha_cutoff) order.emplace_back(t, i);
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double prod = 1.0;
    std::size_t k = 0;
    for (; k < order.size(); ++k) {
      if (k >= hits.size() || hits[k].index != order[k].second) {
        fail(v, "ray " + std::to_string(r) + ": hit order differs");
        break;
      }
      const double a = ray_alpha(s.gaussians[order[k].second], ray);
      worst = std::max({worst, std::abs(hits[k].contribution - a * prod), std::abs(hits[k].transmittance - prod)});
      prod *= 1.0 - a;
      if (prod < plain.eps2) {
        ++k;
        break;
      }
    }
    if (v.pass && hits.size() != k) fail(v, "ray " + std::to_string(r) + ": early termination differs");
  }
  if (worst > kChainTolerance) fail(v, "chain error " + std::to_string(worst));
  if (v.pass) v.detail = "votes {1,1,0}; 1000 rays, max chain error " + std::to_string(worst);
  return v;
}

// ---- 3 ---------------------------------------------------------------------

Verdict two_cluster() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  double min_fraction = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto lg = make_two_clusters(seed);
    Camera cam;
    cam.position = Vec3(0, -2.0, 0.6);
    cam.look_at = Vec3(0, 0, 0);
    cam.up = Vec3(0, 0, 1);
    cam.width = cam.height = 128;
    cam.vertical_fov = 0.9;
    const auto p = cam.project(lg.cluster_centers[0]);
    GaussianLabelOracle oracle(lg.scene, lg.labels);
    const auto r = segment_conditional(lg.scene, {static_cast<int>(p.u), static_cast<int>(p.v)}, cam, oracle);
    double mass_a = 0;
    double got_a = 0;
    int from_b = 0;
    for (std::size_t i = 0; i < lg.scene.size(); ++i) {
      if (lg.labels[i] == 1) mass_a += lg.scene.gaussians[i].opacity;
    }
    for (std::size_t i : r.object_indices) {
      if (lg.labels[i] == 1) got_a += lg.scene.gaussians[i].opacity;
      if (lg.labels[i] == 2) ++from_b;
    }
    std::vector<std::size_t> joined = r.object_indices;
    joined.insert(joined.end(), r.remainder_indices.begin(), r.remainder_indices.end());
    std::sort(joined.begin(), joined.end());
    std::vector<std::size_t> all(lg.scene.size());
    std::iota(all.begin(), all.end(), 0);
    min_fraction = std::min(min_fraction, got_a / mass_a);
    if (from_b != 0) fail(v, "seed " + std::to_string(seed) + ": " + std::to_string(from_b) + " Gaussians of B");
    if (got_a < kMassFraction * mass_a) fail(v, "seed " + std::to_string(seed) + ": mass " + fmt(got_a / mass_a));
    if (joined != all) fail(v, "seed " + std::to_string(seed) + ": partition not exact");
  }
  const double secs = seconds_since(t0);
  if (secs > kTwoClusterSeconds) fail(v, "took " + fmt(secs, 1) + " s");
  if (v.pass) v.detail = "20 seeds, 0 from B, min mass of A " + fmt(min_fraction) + ", " + fmt(secs, 1) + " s";
  return v;
}

// ---- 4 ---------------------------------------------------------------------

Verdict jigsaw_e2e() {
  Verdict v;
  std::vector<std::pair<int, int>> per;
  int max_attempts = 0;
  for (auto [rows, cols] : {std::pair{3, 5}, std::pair{5, 8}}) {
    for (int missing : {4, 6}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const JigsawInstance g = gen_jigsaw(seed, rows, cols, missing);
        Run r = run_oracle(TaskInstance(g));
        int attempts = 0;
        for (const auto& rec : r.episode->records()) {
          attempts += rec.event.kind == "snapped" || rec.event.kind == "unsnapped";
        }
        max_attempts = std::max(max_attempts, attempts);
        const int snapped = jigsaw_completed(g, r.episode->scene());
        per.emplace_back(snapped, missing);
        if (attempts > g.attempts_budget) fail(v, "attempt cap exceeded");
        if (jigsaw_completed_from_trace(r.episode->records()) != snapped) fail(v, "trace and scene disagree");
      }
    }
  }
  const JigsawMetrics m = score_jigsaw(per);
  if (m.completion_rate != 1.0) fail(v, "completion " + fmt(m.completion_rate));

  const JigsawInstance g = gen_jigsaw(0, 3, 5, 4);
  for (const auto& p : g.pieces) {
    const int r = static_cast<int>(g.snap_radius);
    for (PixelPoint d : {PixelPoint{r, 0}, PixelPoint{0, -r}}) {
      if (!snap(g, p.id, {p.slot_center.x + d.x, p.slot_center.y + d.y})) fail(v, "no snap at the radius");
    }
    for (PixelPoint d : {PixelPoint{r + 1, 0}, PixelPoint{0, -(r + 1)}}) {
      if (snap(g, p.id, {p.slot_center.x + d.x, p.slot_center.y + d.y})) fail(v, "snap beyond the radius");
    }
  }
  if (v.pass) {
    v.detail = std::to_string(per.size()) + " instances, completion " + fmt(m.completion_rate) + ", max " +
               std::to_string(max_attempts) + " attempts; snap at r, none at r+1";
  }
  return v;
}

// ---- 5 ---------------------------------------------------------------------

Verdict placement() {
  Verdict v;
  std::mt19937 rng(5);
  int sequences = 0;
  int accepted_moves = 0;
  std::vector<PlacementOutcome> outcomes;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PlacementInstance p = gen_placement(seed);
    const TaskInstance inst = p;
    for (int s = 0; s < 10; ++s, ++sequences) {
      Scene2D scene = episode_setup(inst, RunMode::Full).scene;
      const auto target = static_cast<std::uint32_t>(p.target_id);
      const Mask region = p.labels.region(target);
      std::vector<PixelPoint> pts;
      for (int y = 0; y < region.height(); ++y) {
        for (int x = 0; x < region.width(); ++x) {
          if (region.at(x, y)) pts.push_back({x, y});
        }
      }
      scene.cursor = pts[rng() % pts.size()];
      InstanceMapOracle seg(p.labels);
      scene = accept_focus(request_focus(scene, seg).scene);
      for (int k = 0; k < 60; ++k) {
        const MoveResult mr = move_object(scene, static_cast<Direction>(rng() % 4));
        if (mr.refused) continue;
        scene = mr.scene;
        ++accepted_moves;
        const PixelPoint at = scene.find_layer(scene.focus.id)->location();
        if (!p.platform.at(at.x, at.y)) fail(v, "object point left the platform");
      }
    }
    Run r = run_oracle(inst);
    outcomes.push_back(score_episode(inst, *r.episode).placement);
  }
  const PlacementMetrics m = score_placement(outcomes);
  if (m.locating_rate != 1.0 || m.placement_rate != 1.0) {
    fail(v, "locating " + fmt(m.locating_rate) + ", placement " + fmt(m.placement_rate));
  }
  if (v.pass) {
    v.detail = std::to_string(sequences) + " sequences, " + std::to_string(accepted_moves) +
               " accepted moves inside the platform; locating " + fmt(m.locating_rate) + ", placement " +
               fmt(m.placement_rate) + " on " + std::to_string(m.n) + " instances";
  }
  return v;
}

// ---- 6 ---------------------------------------------------------------------

Verdict runtime_invariants() {
  Verdict v;
  CountingOptions small;
  small.width = small.height = 96;
  small.min_size = 14;
  small.max_size = 20;
  const std::vector<std::string> pool = {"MOVE a", "MOVE b", "MOVE c", "MOVE d", "FOCUS", "ACCEPT", "REJECT",
                                         "IGNORE", "RELEASE", "MOVE a", "MOVE d", "hmm", "ANSWER: 3"};
  std::mt19937 rng(6);
  int checked = 0;
  for (int e = 0; e < 50; ++e) {
    const CountingInstance c = gen_counting(static_cast<std::uint64_t>(e), 3, small);
    TaskEpisodeSetup s = episode_setup(TaskInstance(c), RunMode::Full);
    s.scene.options.inpaint.max_iters = 300;
    std::vector<std::string> script;
    for (int k = 0; k < 40; ++k) script.push_back(pool[rng() % (pool.size() - 1)]);
    script.push_back("ANSWER: 3");
    ScriptedPolicy policy(script);
    s.config.keep_images = false;
    Episode ep(s.scene, policy, nullptr, s.config);
    ep.on_request = [](const ChatRequest& req) { g_max_images = std::max(g_max_images, req.image_count()); };
    ep.run();
    const ReplayResult rr = replay(ep.initial_scene(), ep.records(), nullptr, {});
    checked += rr.checked;
    if (!rr.ok) fail(v, "episode " + std::to_string(e) + " diverged at record " + std::to_string(rr.first_mismatch.value_or(-1)));
    if (ep.final_render_digest() != render_digest(render_view(rr.final_scene))) fail(v, "final digest differs");
  }

  for (RunMode mode : {RunMode::CursorOnly, RunMode::CursorOnlyWithBoxes}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const TaskInstance inst = gen_counting(seed, 5);
      Run r = run_oracle(inst, mode);
      const std::string base = base_digest(r.episode->initial_scene().base);
      for (const auto& rec : r.episode->records()) {
        if (rec.base_digest != base) fail(v, std::string(run_mode_name(mode)) + " changed the base image");
      }
      if (!score_episode(inst, *r.episode).correct) fail(v, std::string(run_mode_name(mode)) + " oracle miscounted");
    }
  }
  if (g_max_images > kMaxImagesPerRequest) fail(v, std::to_string(g_max_images) + " images in one request");
  if (v.pass) {
    v.detail = "50 scripted episodes replayed (" + std::to_string(checked) + " records); max " +
               std::to_string(g_max_images) + " images per request so far; cursor-only base constant";
  }
  return v;
}

// ---- 7 ---------------------------------------------------------------------

Verdict tournament() {
  Verdict v;
  for (int b = 0; b < 50; ++b) {
    const PlacementInstance p = gen_placement(static_cast<std::uint64_t>(b % 10));
    std::size_t truth = 0;
    const auto cands = placement_candidates(p, 8, static_cast<std::uint64_t>(1000 + b), &truth);
    auto cmp = placement_comparator(p);
    const TournamentResult t = run_sampling_tournament(cands, *cmp, placement_plan(p));
    g_max_images = std::max(g_max_images, t.max_images_per_request);
    if (t.failure) fail(v, "bracket " + std::to_string(b) + " failed");
    if (t.winner != truth) fail(v, "bracket " + std::to_string(b) + ": wrong winner");
    if (t.bracket.size() != 7) fail(v, "bracket " + std::to_string(b) + ": " + std::to_string(t.bracket.size()) + " comparisons");
  }
  if (v.pass) v.detail = "50 brackets of 8, ground truth won all, 7 comparisons each";
  return v;
}

// ---- 8 ---------------------------------------------------------------------

Verdict inpainting() {
  Verdict v;
  Image flat(40, 30, {90, 120, 200, 255});
  Mask hole(40, 30);
  for (int y = 8; y < 22; ++y) {
    for (int x = 10; x < 31; ++x) {
      hole.set(x, y, true);
      flat.set(x, y, {0, 0, 0, 255});
    }
  }
  const Image filled = inpaint_diffusion(flat, hole);
  int worst = 0;
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      for (int c = 0; c < 4; ++c) {
        worst = std::max(worst, std::abs(filled.at(x, y)[static_cast<std::size_t>(c)] -
                                         Rgba{90, 120, 200, 255}[static_cast<std::size_t>(c)]));
      }
    }
  }
  if (worst > kInpaintTolerance) fail(v, "constant fill off by " + std::to_string(worst));

  std::mt19937 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Image img(24, 20);
    Mask m(24, 20);
    for (int y = 0; y < 20; ++y) {
      for (int x = 0; x < 24; ++x) {
        img.set(x, y, {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                       static_cast<std::uint8_t>(rng()), 255});
        m.set(x, y, rng() % 10 < 3);
      }
    }
    const Image out = inpaint_diffusion(img, m);
    for (int y = 0; y < 20; ++y) {
      for (int x = 0; x < 24; ++x) {
        if (!m.at(x, y) && out.at(x, y) != img.at(x, y)) fail(v, "non-hole pixel modified");
      }
    }
  }

  Image one(3, 3, {0, 0, 0, 255});
  one.set(1, 0, {10, 10, 10, 255});
  one.set(0, 1, {20, 20, 20, 255});
  one.set(2, 1, {30, 30, 30, 255});
  one.set(1, 2, {40, 40, 40, 255});
  Mask px(3, 3);
  px.set(1, 1, true);
  const int got = inpaint_diffusion(one, px).at(1, 1)[0];
  if (std::abs(got - 25) > kInpaintTolerance) fail(v, "1-px hole gave " + std::to_string(got));
  if (v.pass) {
    v.detail = "constant fill max error " + std::to_string(worst) + "/255; non-hole identical on 20 images; 1-px hole " +
               std::to_string(got) + " (mean 25)";
  }
  return v;
}

// ---- 9 ---------------------------------------------------------------------

Verdict budget_sweep() {
  Verdict v;
  std::ostringstream summary;
  for (int n : {2, 5, 10}) {
    std::vector<TaskInstance> insts;
    for (std::uint64_t seed = 0; seed < 10; ++seed) insts.emplace_back(gen_counting(100 + seed, n));
    std::vector<int> budgets(static_cast<std::size_t>(n + 4));
    std::iota(budgets.begin(), budgets.end(), 0);
    const auto rows = step_budget_sweep(insts.size(), budgets, [&](std::size_t i, int b) {
      Run r = run_oracle(insts[i], RunMode::Full, b);
      return score_episode(insts[i], *r.episode).correct;
    });
    double prev = -1;
    for (const auto& row : rows) {
      if (row.solvable_rate < prev) fail(v, "N=" + std::to_string(n) + ": rate drops at budget " + std::to_string(row.budget));
      if (row.budget >= n && row.solvable_rate != 1.0) {
        fail(v, "N=" + std::to_string(n) + ": rate " + fmt(row.solvable_rate) + " at budget " + std::to_string(row.budget));
      }
      prev = row.solvable_rate;
    }
    summary << (n == 2 ? "" : "; ") << "N=" << n << " rate " << fmt(rows[static_cast<std::size_t>(n - 1)].solvable_rate, 2)
            << " at N-1, 1.00 from N";
  }
  if (v.pass) v.detail = "focus-budget sweep monotone; " + summary.str();
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "oracle counting end to end", counting_e2e},
      {2, "ray voting micro-oracle", ray_micro_oracle},
      {3, "two-cluster 3D separation", two_cluster},
      {4, "jigsaw oracle end to end", jigsaw_e2e},
      {5, "placement constraint and oracle", placement},
      {6, "runtime invariants", runtime_invariants},
      {7, "sampling tournament", tournament},
      {8, "inpainting", inpainting},
      {9, "budget sweep", budget_sweep},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s  %d  %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  const bool images_ok = g_max_images <= kMaxImagesPerRequest;
  std::printf("%s  6  payload image cap over all runs: max %zu images per request\n", images_ok ? "PASS" : "FAIL",
              g_max_images);
  failed += !images_ok;
  return failed == 0 ? 0 : 1;
}
