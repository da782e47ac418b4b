// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "imagine/policy.hpp"
#include "imagine/segment3d.hpp"
#include "imagine/tasks.hpp"

namespace imagine::cli {

using nlohmann::json;

inline constexpr const char* kPolicyTokenEnv = "IMAGINE_POLICY_TOKEN";
inline constexpr const char* kSegmenterTokenEnv = "IMAGINE_SEGMENTER_TOKEN";

struct GeneratorParams {
  std::vector<int> counts{2, 5, 10, 15, 20, 30};  // counting: objects per image
  int per_count = 20;
  std::vector<std::pair<int, int>> grids{{3, 5}, {5, 8}};  // jigsaw
  std::vector<int> missing{4, 6};
  int per_combo = 10;
  int count = 20;  // placement and qa instances
  int n_objects = 4;
  std::vector<int> qa_objects{2, 3, 4, 5};
  double absent_probability = 0.2;
  int width = 256;
  int height = 256;
};

struct ImportSource {
  std::string format;  // clevr | where2place
  std::filesystem::path dir;
};

struct ProviderConfig {
  std::string kind = "oracle";  // policy: oracle | scripted | remote; segmenter: oracle | remote
  std::string endpoint;
  std::string model = "gpt-4o";
  double temperature = 0.0;
  std::string auth_token;  // resolved, never persisted
  int timeout_ms = 120'000;
  int max_retries = 3;
  std::filesystem::path scripts;  // scripted: <scripts>/<instance id>.json
};

struct Sweep {
  std::string budget = "focus";  // focus | step
  std::vector<int> values;
};

struct RunConfig {
  TaskKind task = TaskKind::Counting;
  RunMode mode = RunMode::Full;
  std::uint64_t seed = 0;
  GeneratorParams generator;
  std::optional<ImportSource> import;
  ProviderConfig policy;
  ProviderConfig segmenter;
  SegConfig seg3d;
  double step_decay = 0.5;
  int step_floor = 2;
  std::optional<int> step_initial;
  std::optional<int> step_budget;  // default: the task's own
  std::optional<int> focus_budget;
  int max_parse_failures = 3;
  int max_policy_calls = 4000;
  std::size_t token_budget = 16000;
  std::optional<Sweep> sweep;
  int sampling_candidates = 8;
  std::filesystem::path dataset;
  std::filesystem::path output;
  int parallel = 1;

  /// The document as written (secrets still as ${VAR} references), with
  /// command-line overrides applied.
  json document;

  std::vector<std::string> secrets() const;
};

/// Replaces ${VAR} in every string of `doc`. Unset variables throw
/// Error(InvalidArgument).
json interpolate(const json& doc);

/// Sets `doc[a][b]...` for a dotted key. The value is parsed as JSON when it
/// is valid JSON and kept as a string otherwise.
void set_path(json& doc, const std::string& dotted_key, const std::string& value);

/// Parses and validates. Errors name the offending field.
RunConfig parse_config(const json& document);

json read_config_file(const std::filesystem::path& path);

/// The document with literal secrets replaced; ${VAR} references are kept.
json persisted_document(const RunConfig& cfg);

/// Scene and episode settings that the config overrides.
void apply_scene_settings(const RunConfig& cfg, Scene2D& scene);
void apply_episode_settings(const RunConfig& cfg, EpisodeConfig& ep);

}  // namespace imagine::cli
