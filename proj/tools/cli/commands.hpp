// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace imagine::cli {

inline constexpr const char* kDatasetSchema = "imagine-dataset";
inline constexpr const char* kResultsSchema = "imagine-results";
inline constexpr const char* kTournamentSchema = "imagine-tournament";
inline constexpr int kFormatVersion = 1;
inline constexpr const char* kGeneratorVersion = "1";

struct DatasetEntry {
  std::string id;
  std::string dir;  // relative to the dataset root
  std::uint64_t seed = 0;
  json params;
};

struct Manifest {
  TaskKind task = TaskKind::Counting;
  std::string source;  // synthetic | clevr | where2place
  std::vector<DatasetEntry> entries;
  json document;
};

/// Throws Error(SchemaMismatch) for foreign files.
Manifest read_manifest(const std::filesystem::path& dataset);

/// Rebuilds a synthetic instance from its manifest entry.
TaskInstance generate_instance(TaskKind task, const json& params, std::uint64_t seed);

/// Writes instance bundles, manifest.json and config.json under cfg.output.
Manifest cmd_generate(const RunConfig& cfg);

/// Runs every instance of cfg.dataset and writes traces, images,
/// results.json and results.csv under cfg.output. Per-instance failures are
/// recorded; configuration and IO problems throw.
json cmd_run(const RunConfig& cfg);

/// Compares run directories. Writes comparison.csv and SVG plots into `out`.
/// Throws Error(SchemaMismatch) when the runs cover different tasks.
void cmd_report(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out);

struct ReplaySummary {
  std::size_t frames = 0;
  bool ok = true;
  std::optional<int> first_mismatch;
};

/// Re-renders a trace into numbered PNG frames. The instance is found through
/// the trace header unless `dataset` is given.
ReplaySummary cmd_replay(const std::filesystem::path& trace, const std::filesystem::path& out,
                         const std::optional<std::filesystem::path>& dataset = std::nullopt,
                         const std::string& segmenter_endpoint = {});

/// Refuses to reuse a directory that holds anything other than an earlier
/// output whose marker file has the given schema.
void prepare_output_dir(const std::filesystem::path& dir, const std::string& marker, const std::string& schema);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace imagine::cli
