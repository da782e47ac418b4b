// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <cstdlib>

#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "imagine/error.hpp"
#include "imagine/png_io.hpp"
#include "imagine/runtime.hpp"

namespace imagine::cli {

namespace fs = std::filesystem;

namespace {

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.png", i);
  return buf;
}

TaskInstance locate_instance(const json& inst, const std::optional<fs::path>& dataset) {
  const fs::path root = dataset ? *dataset : fs::path(inst.value("dataset", ""));
  const fs::path dir = root / inst.value("dir", "");
  if (!root.empty() && fs::exists(dir / "instance.json")) return load_instance(dir);
  const auto task = task_kind_from_name(inst.value("task", ""));
  if (!task || !inst.contains("params") || !inst.contains("seed")) {
    throw Error(ErrorCode::Io, "instance " + dir.string() + " not found and cannot be regenerated");
  }
  spdlog::info("regenerating {} from its seed", inst.value("id", "instance"));
  return generate_instance(*task, inst["params"], inst["seed"].get<std::uint64_t>());
}

}  // namespace

ReplaySummary cmd_replay(const fs::path& trace, const fs::path& out, const std::optional<fs::path>& dataset,
                         const std::string& segmenter_endpoint) {
  const LoadedTrace loaded = read_trace(trace);
  const json header = json::parse(loaded.header_json);
  const json inst_info = header.value("instance", json::object());
  const TaskInstance inst = locate_instance(inst_info, dataset);

  const auto mode = run_mode_from_name(header.value("run_mode", "full"));
  if (!mode) throw Error(ErrorCode::SchemaMismatch, "unknown run mode in trace header");
  TaskEpisodeSetup s = episode_setup(inst, *mode);

  json doc = {{"task", task_kind_name(task_kind_of(inst))}, {"mode", run_mode_name(*mode)}};
  if (header.contains("scene")) {
    const json& sc = header["scene"];
    doc["steps"] = {{"decay", sc.value("step_decay", 0.5)}, {"floor", sc.value("step_floor", 2)}};
    if (sc.contains("step_initial") && !sc["step_initial"].is_null()) doc["steps"]["initial"] = sc["step_initial"];
  }
  const RunConfig cfg = parse_config(doc);
  apply_scene_settings(cfg, s.scene);

  std::shared_ptr<SegmentationProvider> segmenter;
  const std::string seg_kind = header.value("segmenter", json::object()).value("kind", "oracle");
  if (seg_kind == "remote") {
    if (segmenter_endpoint.empty()) {
      throw Error(ErrorCode::InvalidArgument, "the trace used a remote segmenter; pass --segmenter-endpoint");
    }
    const char* token = std::getenv(kSegmenterTokenEnv);
    segmenter = remote_provider(segmenter_endpoint, token ? token : "");
  }

  fs::create_directories(out);
  ReplaySummary summary;
  Scene2D scene = s.scene;
  std::unique_ptr<TaskHooks> hooks = s.hooks ? s.hooks() : nullptr;
  for (const TraceRecord& r : loaded.records) {
    const Image view = render_view(scene);
    write_png(out / frame_name(summary.frames++), view);
    if (summary.ok && render_digest(view) != r.render_digest) {
      summary.ok = false;
      summary.first_mismatch = r.seq;
    }
    if (r.action && r.applied) apply_action(scene, *r.action, segmenter.get(), hooks.get());
  }
  write_png(out / frame_name(summary.frames++), render_view(scene));
  if (summary.ok) {
    spdlog::info("{} frames written to {}; every render matches the trace", summary.frames, out.string());
  } else {
    spdlog::warn("{} frames written; render diverges from the trace at record {}", summary.frames,
                 *summary.first_mismatch);
  }
  return summary;
}

}  // namespace imagine::cli
