// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "imagine/error.hpp"

namespace {

using imagine::cli::json;

struct Overrides {
  std::string config;
  std::vector<std::string> sets;
  std::string task, mode, policy, dataset, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallel;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON config file; ${VAR} is read from the environment")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "Override a config value, e.g. --set budgets.focus=5 (repeatable)");
  cmd->add_option("--task", o.task, "counting | jigsaw | placement | qa");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("-o,--out", o.out, "Output directory");
}

imagine::cli::RunConfig build_config(const Overrides& o) {
  json doc = o.config.empty() ? json::object() : imagine::cli::read_config_file(o.config);
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) doc[key] = v;
  };
  set("task", o.task);
  set("mode", o.mode);
  set("dataset", o.dataset);
  set("output", o.out);
  if (!o.policy.empty()) doc["policy"]["kind"] = o.policy;
  if (o.seed) doc["seed"] = *o.seed;
  if (o.parallel) doc["parallel"] = *o.parallel;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw imagine::Error(imagine::ErrorCode::InvalidArgument, "--set expects key=value");
    imagine::cli::set_path(doc, s.substr(0, eq), s.substr(eq + 1));
  }
  return imagine::cli::parse_config(doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop visual reasoning: datasets, episodes, reports and trace replay"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace | debug | info | warn | error | off");

  Overrides gen_o;
  auto* gen = app.add_subcommand("generate", "Write task instances and a manifest");
  add_common(gen, gen_o);

  Overrides run_o;
  auto* run = app.add_subcommand("run", "Run every instance of a dataset and score it");
  add_common(run, run_o);
  run->add_option("-d,--dataset", run_o.dataset, "Dataset directory from 'generate'");
  run->add_option("--mode", run_o.mode, "full | cursor-only | cursor-boxes | sampling");
  run->add_option("--policy", run_o.policy, "oracle | scripted | remote");
  run->add_option("-j,--parallel", run_o.parallel, "Instances run concurrently")->check(CLI::PositiveNumber);

  std::vector<std::string> report_runs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Compare run directories: CSV tables and SVG plots");
  report->add_option("runs", report_runs, "Run directories")->required()->check(CLI::ExistingDirectory);
  report->add_option("-o,--out", report_out, "Report directory")->required();

  std::string trace, replay_out, replay_dataset, seg_endpoint;
  auto* replay = app.add_subcommand("replay", "Re-render a trace into a directory of frames");
  replay->add_option("trace", trace, "Trace JSONL file")->required()->check(CLI::ExistingFile);
  replay->add_option("-o,--out", replay_out, "Frame directory")->required();
  replay->add_option("-d,--dataset", replay_dataset, "Dataset directory (default: the one named in the trace)");
  replay->add_option("--segmenter-endpoint", seg_endpoint, "Segmentation service for traces that used one");

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("imagine");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*gen) {
      imagine::cli::cmd_generate(build_config(gen_o));
    } else if (*run) {
      const json results = imagine::cli::cmd_run(build_config(run_o));
      std::cout << results["metrics"].dump() << "\n";
    } else if (*report) {
      std::vector<std::filesystem::path> dirs(report_runs.begin(), report_runs.end());
      imagine::cli::cmd_report(dirs, report_out);
    } else if (*replay) {
      const auto summary = imagine::cli::cmd_replay(
          trace, replay_out, replay_dataset.empty() ? std::nullopt : std::optional<std::filesystem::path>(replay_dataset),
          seg_endpoint);
      return summary.ok ? 0 : 3;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
