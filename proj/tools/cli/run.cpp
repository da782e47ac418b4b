// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "imagine/error.hpp"
#include "imagine/runtime.hpp"

namespace imagine::cli {

namespace fs = std::filesystem;

namespace {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  const std::size_t extra = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  for (std::size_t t = 1; t < extra; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

std::string scrub(std::string text, const std::vector<std::string>& secrets) {
  for (const auto& s : secrets) text = redact(std::move(text), s);
  return text;
}

std::unique_ptr<Policy> make_policy(const RunConfig& cfg, const TaskInstance& inst, const DatasetEntry& entry) {
  const ProviderConfig& p = cfg.policy;
  if (p.kind == "oracle") return oracle_for(inst, cfg.mode);
  if (p.kind == "scripted") {
    const fs::path file = p.scripts / (entry.id + ".json");
    const json lines = read_json(file);
    if (!lines.is_array()) throw Error(ErrorCode::InvalidArgument, file.string() + ": expected an array of replies");
    return std::make_unique<ScriptedPolicy>(lines.get<std::vector<std::string>>());
  }
  ChatEndpoint ep;
  ep.url = p.endpoint;
  ep.timeout = std::chrono::milliseconds(p.timeout_ms);
  ep.max_retries = p.max_retries;
  return std::make_unique<RemotePolicy>(ep, p.auth_token);
}

std::shared_ptr<SegmentationProvider> make_segmenter(const RunConfig& cfg) {
  if (cfg.segmenter.kind != "remote") return nullptr;
  RemoteOptions o;
  o.timeout = std::chrono::milliseconds(cfg.segmenter.timeout_ms);
  o.max_retries = cfg.segmenter.max_retries;
  return remote_provider(cfg.segmenter.endpoint, cfg.segmenter.auth_token, o);
}

json trace_header(const RunConfig& cfg, const DatasetEntry& entry) {
  return {{"instance",
           {{"id", entry.id},
            {"dir", entry.dir},
            {"seed", entry.seed},
            {"params", entry.params},
            {"task", task_kind_name(cfg.task)},
            {"dataset", fs::absolute(cfg.dataset).lexically_normal().string()}}},
          {"policy", {{"kind", cfg.policy.kind}, {"model", cfg.policy.model}}},
          {"segmenter", {{"kind", cfg.segmenter.kind}}},
          {"scene",
           {{"step_decay", cfg.step_decay},
            {"step_floor", cfg.step_floor},
            {"step_initial", cfg.step_initial ? json(*cfg.step_initial) : json(nullptr)}}}};
}

json point_json(const std::optional<PixelPoint>& p) { return p ? json{p->x, p->y} : json(nullptr); }

struct Budget {
  std::string kind;
  int value = 0;
};

/// One episode. With `budget` set the episode is a sweep probe and nothing
/// is written.
json run_episode(const RunConfig& cfg, const TaskInstance& inst, const DatasetEntry& entry,
                 const std::optional<Budget>& budget) {
  TaskEpisodeSetup s = episode_setup(inst, cfg.mode);
  apply_scene_settings(cfg, s.scene);
  apply_episode_settings(cfg, s.config);
  if (budget) {
    if (budget->kind == "focus") s.config.limits.focus_budget = budget->value;
    if (budget->kind == "step") s.config.limits.step_budget = budget->value;
  }
  s.config.keep_images = !budget;
  auto policy = make_policy(cfg, inst, entry);
  Episode ep(s.scene, *policy, make_segmenter(cfg), s.config, s.hooks ? s.hooks() : nullptr);
  ep.run();
  const EpisodeScore score = score_episode(inst, ep);
  const Outcome& o = ep.outcome();
  const EpisodeStats& st = ep.stats();
  json r = {{"id", entry.id},
            {"seed", entry.seed},
            {"status", outcome_status_name(o.status)},
            {"reason", o.reason ? json(failure_reason_name(*o.reason)) : json(nullptr)},
            {"answer", o.answer},
            {"detail", o.detail},
            {"correct", score.correct},
            {"actions", ep.t()},
            {"policy_calls", st.policy_calls},
            {"parse_failures", st.parse_failures},
            {"focus_steps", st.focus_steps},
            {"max_images_per_request", st.max_images_per_request}};
  switch (task_kind_of(inst)) {
    case TaskKind::Counting:
      r["truth"] = score.truth;
      r["predicted"] = score.predicted ? json(*score.predicted) : json(nullptr);
      break;
    case TaskKind::Jigsaw:
      r["snapped"] = score.snapped;
      r["missing"] = score.missing;
      break;
    case TaskKind::Placement:
      r["located"] = score.placement.located;
      r["placed"] = score.placement.placed;
      r["final_point"] = point_json(score.placement.final_point);
      r["contact_point"] = point_json(score.placement.contact_point);
      break;
    case TaskKind::QA:
      r["truth"] = std::get<QaInstance>(inst).truth;
      break;
  }
  if (!budget) {
    write_trace(ep, cfg.output / "traces" / (entry.id + ".jsonl"), cfg.output / "images",
                trace_header(cfg, entry).dump(), cfg.secrets());
  }
  return r;
}

json run_tournament(const RunConfig& cfg, const TaskInstance& inst, const DatasetEntry& entry) {
  const auto* p = std::get_if<PlacementInstance>(&inst);
  if (!p) throw Error(ErrorCode::InvalidArgument, "the sampling baseline needs a placement instance");
  std::size_t truth = 0;
  const auto cands = placement_candidates(*p, cfg.sampling_candidates, cfg.seed + entry.seed, &truth);
  auto policy = make_policy(cfg, inst, entry);
  ChatOptions chat;
  chat.model = cfg.policy.model;
  chat.temperature = cfg.policy.temperature;
  chat.token_budget = cfg.token_budget;
  const TournamentResult t = run_sampling_tournament(cands, *policy, placement_plan(*p), chat);
  const PlacementOutcome o = t.failure ? PlacementOutcome{} : evaluate_placement(*p, cands[t.winner]);

  json bracket = json::array();
  for (const Match& m : t.bracket) {
    bracket.push_back(
        {{"round", m.round}, {"first", m.first}, {"second", m.second}, {"winner", m.winner}, {"raw", m.raw}});
  }
  const json doc = {{"schema", kTournamentSchema},
                    {"version", kFormatVersion},
                    {"header", trace_header(cfg, entry)},
                    {"candidates", cands.size()},
                    {"truth", truth},
                    {"winner", t.winner},
                    {"bracket", bracket},
                    {"failure", t.failure ? json(t.failure->detail) : json(nullptr)}};
  write_text(cfg.output / "traces" / (entry.id + ".tournament.json"), scrub(doc.dump(2), cfg.secrets()) + "\n");

  return {{"id", entry.id},
          {"seed", entry.seed},
          {"status", t.failure ? "failed" : "answered"},
          {"reason", t.failure && t.failure->reason ? json(failure_reason_name(*t.failure->reason)) : json(nullptr)},
          {"answer", ""},
          {"detail", t.failure ? t.failure->detail : ""},
          {"correct", o.placed},
          {"actions", 0},
          {"policy_calls", t.bracket.size()},
          {"parse_failures", 0},
          {"focus_steps", 0},
          {"max_images_per_request", t.max_images_per_request},
          {"located", o.located},
          {"placed", o.placed},
          {"final_point", point_json(o.final_point)},
          {"contact_point", point_json(o.contact_point)},
          {"winner", t.winner},
          {"truth_candidate", truth}};
}

json error_result(const DatasetEntry& entry, const std::string& what) {
  return {{"id", entry.id},       {"seed", entry.seed},   {"status", "error"},    {"reason", nullptr},
          {"answer", ""},         {"detail", what},       {"correct", false},     {"actions", 0},
          {"policy_calls", 0},    {"parse_failures", 0},  {"focus_steps", 0},     {"max_images_per_request", 0}};
}

json aggregate(TaskKind task, const std::vector<json>& results, const std::vector<DatasetEntry>& entries,
               json& by_count) {
  switch (task) {
    case TaskKind::Counting: {
      std::vector<std::optional<int>> preds;
      std::vector<int> truths;
      std::map<int, std::pair<int, int>> per_n;  // truth -> (correct, total)
      for (std::size_t i = 0; i < results.size(); ++i) {
        const json& r = results[i];
        const int truth = r.contains("truth") ? r["truth"].get<int>() : entries[i].params.value("n", 0);
        truths.push_back(truth);
        preds.push_back(r.contains("predicted") && !r["predicted"].is_null() ? std::optional<int>(r["predicted"].get<int>())
                                                                              : std::nullopt);
        auto& [ok, total] = per_n[truth];
        ok += r["correct"].get<bool>();
        ++total;
      }
      by_count = json::array();
      for (const auto& [n, c] : per_n) {
        by_count.push_back({{"n", n},
                            {"instances", c.second},
                            {"success_rate", static_cast<double>(c.first) / c.second}});
      }
      const CountingMetrics m = score_counting(preds, truths);
      return {{"success_rate", m.success_rate}, {"mean_error", m.mean_error}, {"variance", m.variance}};
    }
    case TaskKind::Jigsaw: {
      std::vector<std::pair<int, int>> per;
      for (std::size_t i = 0; i < results.size(); ++i) {
        const json& r = results[i];
        const int missing = r.contains("missing") ? r["missing"].get<int>() : entries[i].params.value("missing", 0);
        per.emplace_back(r.value("snapped", 0), missing);
      }
      return {{"completion_rate", score_jigsaw(per).completion_rate}};
    }
    case TaskKind::Placement: {
      std::vector<PlacementOutcome> outs;
      for (const json& r : results) {
        PlacementOutcome o;
        o.located = r.value("located", false);
        o.placed = r.value("placed", false);
        outs.push_back(o);
      }
      const PlacementMetrics m = score_placement(outs);
      return {{"locating_rate", m.locating_rate}, {"placement_rate", m.placement_rate}};
    }
    case TaskKind::QA: {
      std::vector<bool> ok;
      for (const json& r : results) ok.push_back(r["correct"].get<bool>());
      return {{"accuracy", score_qa(ok).accuracy}};
    }
  }
  return json::object();
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

json cmd_run(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw Error(ErrorCode::InvalidArgument, "dataset: required");
  const Manifest manifest = read_manifest(cfg.dataset);
  if (manifest.task != cfg.task) {
    throw Error(ErrorCode::InvalidArgument, std::string("task: config says ") + std::string(task_kind_name(cfg.task)) +
                                                " but the dataset holds " + std::string(task_kind_name(manifest.task)));
  }
  prepare_output_dir(cfg.output, "results.json", kResultsSchema);
  write_json(cfg.output / "config.json", persisted_document(cfg));
  write_json(cfg.output / "manifest.json", manifest.document);

  const auto& entries = manifest.entries;
  std::vector<std::optional<TaskInstance>> instances(entries.size());
  std::vector<json> results(entries.size());
  std::atomic<int> done{0};
  parallel_for(entries.size(), cfg.parallel, [&](std::size_t i) {
    try {
      instances[i] = load_instance(cfg.dataset / entries[i].dir);
      results[i] = cfg.mode == RunMode::SamplingTournament ? run_tournament(cfg, *instances[i], entries[i])
                                                           : run_episode(cfg, *instances[i], entries[i], std::nullopt);
    } catch (const std::exception& e) {
      results[i] = error_result(entries[i], scrub(e.what(), cfg.secrets()));
      spdlog::warn("{}: {}", entries[i].id, scrub(e.what(), cfg.secrets()));
    }
    const int k = ++done;
    if (k % 10 == 0 || k == static_cast<int>(entries.size())) spdlog::info("{}/{} instances", k, entries.size());
  });

  json by_count;
  const json metrics = aggregate(cfg.task, results, entries, by_count);
  int errors = 0;
  for (const json& r : results) errors += r["status"] == "error";

  json doc = {{"schema", kResultsSchema},
              {"version", kFormatVersion},
              {"task", task_kind_name(cfg.task)},
              {"mode", run_mode_name(cfg.mode)},
              {"policy", cfg.policy.kind},
              {"model", cfg.policy.model},
              {"dataset_source", manifest.source},
              {"instances", entries.size()},
              {"errors", errors},
              {"metrics", metrics}};
  if (!by_count.is_null()) doc["by_count"] = by_count;

  if (cfg.sweep) {
    const auto& values = cfg.sweep->values;
    std::vector<char> solved(entries.size() * values.size(), 0);
    parallel_for(solved.size(), cfg.parallel, [&](std::size_t k) {
      const std::size_t i = k / values.size();
      if (!instances[i]) return;
      try {
        const json r = run_episode(cfg, *instances[i], entries[i], Budget{cfg.sweep->budget, values[k % values.size()]});
        solved[k] = r["correct"].get<bool>();
      } catch (const std::exception& e) {
        spdlog::warn("{} (budget {}): {}", entries[i].id, values[k % values.size()], scrub(e.what(), cfg.secrets()));
      }
    });
    const auto rows = step_budget_sweep(entries.size(), values, [&](std::size_t i, int b) {
      const auto j = static_cast<std::size_t>(std::find(values.begin(), values.end(), b) - values.begin());
      return solved[i * values.size() + j] != 0;
    });
    json jr = json::array();
    for (const SweepRow& r : rows) {
      jr.push_back({{"budget", r.budget}, {"solved", r.solved}, {"total", r.total}, {"solvable_rate", r.solvable_rate}});
    }
    doc["sweep"] = {{"budget", cfg.sweep->budget}, {"rows", jr}};
  }

  json reference = json::array();
  for (const ReferenceRow& r : reference_results()) {
    if (r.task == task_kind_name(cfg.task)) {
      reference.push_back({{"setting", r.setting}, {"metric", r.metric}, {"value", r.value}});
    }
  }
  doc["reference"] = reference;
  doc["results"] = results;

  write_text(cfg.output / "results.json", scrub(doc.dump(2), cfg.secrets()) + "\n");
  std::string csv = "task,dataset,mode,policy,metric,value\n";
  for (const auto& [k, v] : metrics.items()) {
    csv += std::string(task_kind_name(cfg.task)) + "," + manifest.source + "," + std::string(run_mode_name(cfg.mode)) +
           "," + cfg.policy.kind + "," + k + "," + csv_number(v.get<double>()) + "\n";
  }
  write_text(cfg.output / "results.csv", csv);
  spdlog::info("results in {}", (cfg.output / "results.json").string());
  return doc;
}

}  // namespace imagine::cli
