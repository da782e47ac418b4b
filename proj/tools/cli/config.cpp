// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "imagine/error.hpp"
#include "imagine/runtime.hpp"

namespace imagine::cli {

namespace {

/// Error text without its code prefix.
std::string reason(const Error& e) {
  const std::string w = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
}

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvalidArgument, field + ": " + why);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad(where.empty() ? "config" : where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) bad(where.empty() ? key : where + "." + key, "unknown field");
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception&) {
    bad(where.empty() ? key : where + "." + key, "wrong type");
  }
}

template <typename T>
std::optional<T> get_opt(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return get<T>(obj, key, where, T{});
}

const json& section(const json& doc, const std::string& key) {
  static const json empty = json::object();
  return doc.contains(key) ? doc[key] : empty;
}

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) bad(field, why);
}

std::string interpolate_string(const std::string& s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t open = s.find("${", i);
    if (open == std::string::npos) {
      out += s.substr(i);
      break;
    }
    const std::size_t close = s.find('}', open);
    if (close == std::string::npos) bad("config", "unterminated ${ in \"" + s + "\"");
    out += s.substr(i, open - i);
    const std::string name = s.substr(open + 2, close - open - 2);
    const char* value = std::getenv(name.c_str());
    if (!value) bad("config", "environment variable " + name + " is not set");
    out += value;
    i = close + 1;
  }
  return out;
}

bool is_reference(const json& v) {
  if (!v.is_string()) return false;
  const auto s = v.get<std::string>();
  return s.size() > 3 && s.rfind("${", 0) == 0 && s.back() == '}' && s.find('}') == s.size() - 1;
}

ProviderConfig parse_provider(const json& j, const std::string& where, const char* token_env, bool policy) {
  check_keys(j, where,
             {"kind", "endpoint", "model", "temperature", "auth_token", "timeout_ms", "max_retries", "scripts"});
  ProviderConfig p;
  p.kind = get<std::string>(j, "kind", where, "oracle");
  const std::set<std::string> kinds = policy ? std::set<std::string>{"oracle", "scripted", "remote"}
                                             : std::set<std::string>{"oracle", "remote"};
  require(kinds.count(p.kind) > 0, where + ".kind", "unknown provider kind '" + p.kind + "'");
  p.endpoint = get<std::string>(j, "endpoint", where, "");
  p.model = get<std::string>(j, "model", where, p.model);
  p.temperature = get<double>(j, "temperature", where, 0.0);
  p.timeout_ms = get<int>(j, "timeout_ms", where, policy ? 120'000 : 60'000);
  p.max_retries = get<int>(j, "max_retries", where, 3);
  p.scripts = get<std::string>(j, "scripts", where, "");
  if (j.contains("auth_token")) {
    p.auth_token = get<std::string>(j, "auth_token", where, "");
  } else if (const char* env = std::getenv(token_env)) {
    p.auth_token = env;
  }
  require(p.timeout_ms > 0, where + ".timeout_ms", "must be positive");
  require(p.max_retries >= 0, where + ".max_retries", "must not be negative");
  if (p.kind == "remote") require(!p.endpoint.empty(), where + ".endpoint", "required for a remote provider");
  if (p.kind == "scripted") require(!p.scripts.empty(), where + ".scripts", "required for a scripted policy");
  return p;
}

}  // namespace

std::vector<std::string> RunConfig::secrets() const {
  std::vector<std::string> out;
  for (const auto* p : {&policy, &segmenter}) {
    if (!p->auth_token.empty()) out.push_back(p->auth_token);
  }
  return out;
}

json interpolate(const json& doc) {
  if (doc.is_string()) return interpolate_string(doc.get<std::string>());
  if (doc.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : doc.items()) out[k] = interpolate(v);
    return out;
  }
  if (doc.is_array()) {
    json out = json::array();
    for (const auto& v : doc) out.push_back(interpolate(v));
    return out;
  }
  return doc;
}

void set_path(json& doc, const std::string& dotted_key, const std::string& value) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string key = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) bad(dotted_key, "empty key segment");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) bad("config", path.string() + " is not valid JSON");
  return doc;
}

RunConfig parse_config(const json& document) {
  RunConfig cfg;
  cfg.document = document.is_null() ? json::object() : document;
  const json doc = interpolate(cfg.document);
  check_keys(doc, "",
             {"task", "mode", "seed", "generator", "import", "policy", "segmenter", "seg3d", "steps", "budgets",
              "sweep", "sampling", "dataset", "output", "parallel"});

  const auto task = get<std::string>(doc, "task", "", "counting");
  const auto kind = task_kind_from_name(task);
  require(kind.has_value(), "task", "unknown task '" + task + "'");
  cfg.task = *kind;
  const auto mode = get<std::string>(doc, "mode", "", "full");
  const auto rm = run_mode_from_name(mode);
  require(rm.has_value(), "mode", "unknown run mode '" + mode + "'");
  cfg.mode = *rm;
  if (cfg.mode == RunMode::SamplingTournament) {
    require(cfg.task == TaskKind::Placement, "mode", "the sampling baseline needs the placement task");
  }
  cfg.seed = get<std::uint64_t>(doc, "seed", "", 0);
  cfg.parallel = get<int>(doc, "parallel", "", 1);
  require(cfg.parallel >= 1, "parallel", "must be at least 1");
  cfg.dataset = get<std::string>(doc, "dataset", "", "");
  cfg.output = get<std::string>(doc, "output", "", "");

  const json& g = section(doc, "generator");
  check_keys(g, "generator",
             {"counts", "per_count", "grids", "missing", "per_combo", "count", "n_objects", "qa_objects",
              "absent_probability", "width", "height"});
  GeneratorParams& gp = cfg.generator;
  gp.counts = get(g, "counts", "generator", gp.counts);
  gp.per_count = get(g, "per_count", "generator", gp.per_count);
  gp.grids = get(g, "grids", "generator", gp.grids);
  gp.missing = get(g, "missing", "generator", gp.missing);
  gp.per_combo = get(g, "per_combo", "generator", gp.per_combo);
  gp.count = get(g, "count", "generator", gp.count);
  gp.n_objects = get(g, "n_objects", "generator", gp.n_objects);
  gp.qa_objects = get(g, "qa_objects", "generator", gp.qa_objects);
  gp.absent_probability = get(g, "absent_probability", "generator", gp.absent_probability);
  gp.width = get(g, "width", "generator", gp.width);
  gp.height = get(g, "height", "generator", gp.height);
  for (int n : gp.counts) require(n >= 0, "generator.counts", "counts must not be negative");
  require(gp.per_count >= 1, "generator.per_count", "must be at least 1");
  require(gp.per_combo >= 1, "generator.per_combo", "must be at least 1");
  require(gp.count >= 1, "generator.count", "must be at least 1");
  require(gp.width >= 32 && gp.height >= 32, "generator.width", "canvas must be at least 32x32");
  require(gp.absent_probability >= 0 && gp.absent_probability <= 1, "generator.absent_probability",
          "must lie in [0, 1]");
  if (cfg.task == TaskKind::Jigsaw) {
    for (const auto& [rows, cols] : gp.grids) {
      for (int m : gp.missing) {
        try {
          validate_jigsaw_params(rows, cols, m);
        } catch (const Error& e) {
          bad("generator.grids", std::to_string(rows) + "x" + std::to_string(cols) + " with " + std::to_string(m) +
                                     " missing: " + reason(e));
        }
      }
    }
  }
  if (cfg.task == TaskKind::QA) {
    for (int n : gp.qa_objects) require(n >= 2 && n <= 7, "generator.qa_objects", "each entry must lie in [2, 7]");
  }
  if (cfg.task == TaskKind::Placement) {
    require(gp.n_objects >= 2, "generator.n_objects", "placement needs at least 2 objects");
  }

  if (doc.contains("import") && !doc["import"].is_null()) {
    const json& im = doc["import"];
    check_keys(im, "import", {"format", "dir"});
    ImportSource src{get<std::string>(im, "format", "import", ""), get<std::string>(im, "dir", "import", "")};
    require(src.format == "clevr" || src.format == "where2place", "import.format",
            "expected clevr or where2place");
    require(!src.dir.empty(), "import.dir", "required");
    const TaskKind wanted = src.format == "clevr" ? TaskKind::Counting : TaskKind::Placement;
    require(cfg.task == wanted, "import.format", src.format + " needs task " + std::string(task_kind_name(wanted)));
    cfg.import = src;
  }

  cfg.policy = parse_provider(section(doc, "policy"), "policy", kPolicyTokenEnv, true);
  cfg.segmenter = parse_provider(section(doc, "segmenter"), "segmenter", kSegmenterTokenEnv, false);

  const json& s3 = section(doc, "seg3d");
  check_keys(s3, "seg3d",
             {"eps1", "eps2", "vote_fraction", "n_frames", "orbit_elevation", "orbit_radius_factor", "frame_fov",
              "frame_resolution", "alpha_cutoff", "voxel_resolution"});
  SegConfig& sc = cfg.seg3d;
  sc.eps1 = get(s3, "eps1", "seg3d", sc.eps1);
  sc.eps2 = get(s3, "eps2", "seg3d", sc.eps2);
  sc.vote_fraction = get(s3, "vote_fraction", "seg3d", sc.vote_fraction);
  sc.n_frames = get(s3, "n_frames", "seg3d", sc.n_frames);
  sc.orbit_elevation = get(s3, "orbit_elevation", "seg3d", sc.orbit_elevation);
  sc.orbit_radius_factor = get(s3, "orbit_radius_factor", "seg3d", sc.orbit_radius_factor);
  sc.frame_fov = get(s3, "frame_fov", "seg3d", sc.frame_fov);
  sc.frame_resolution = get(s3, "frame_resolution", "seg3d", sc.frame_resolution);
  sc.alpha_cutoff = get(s3, "alpha_cutoff", "seg3d", sc.alpha_cutoff);
  sc.voxel_resolution = get(s3, "voxel_resolution", "seg3d", sc.voxel_resolution);
  try {
    sc.validate();
  } catch (const Error& e) {
    bad("seg3d", reason(e));
  }

  const json& st = section(doc, "steps");
  check_keys(st, "steps", {"decay", "floor", "initial"});
  cfg.step_decay = get(st, "decay", "steps", cfg.step_decay);
  cfg.step_floor = get(st, "floor", "steps", cfg.step_floor);
  cfg.step_initial = get_opt<int>(st, "initial", "steps");
  require(cfg.step_decay > 0 && cfg.step_decay <= 1, "steps.decay", "must lie in (0, 1]");
  require(cfg.step_floor >= 1, "steps.floor", "must be at least 1");
  if (cfg.step_initial) require(*cfg.step_initial >= 1, "steps.initial", "must be at least 1");

  const json& b = section(doc, "budgets");
  check_keys(b, "budgets", {"step", "focus", "max_parse_failures", "max_policy_calls", "token_budget"});
  cfg.step_budget = get_opt<int>(b, "step", "budgets");
  cfg.focus_budget = get_opt<int>(b, "focus", "budgets");
  cfg.max_parse_failures = get(b, "max_parse_failures", "budgets", cfg.max_parse_failures);
  cfg.max_policy_calls = get(b, "max_policy_calls", "budgets", cfg.max_policy_calls);
  cfg.token_budget = get(b, "token_budget", "budgets", cfg.token_budget);
  if (cfg.step_budget) require(*cfg.step_budget >= 0, "budgets.step", "must not be negative");
  if (cfg.focus_budget) require(*cfg.focus_budget >= 0, "budgets.focus", "must not be negative");
  require(cfg.max_parse_failures >= 1, "budgets.max_parse_failures", "must be at least 1");
  require(cfg.max_policy_calls >= 1, "budgets.max_policy_calls", "must be at least 1");

  if (doc.contains("sweep") && !doc["sweep"].is_null()) {
    const json& sw = doc["sweep"];
    check_keys(sw, "sweep", {"budget", "values"});
    Sweep s{get<std::string>(sw, "budget", "sweep", "focus"), get<std::vector<int>>(sw, "values", "sweep", {})};
    require(s.budget == "focus" || s.budget == "step", "sweep.budget", "expected focus or step");
    require(!s.values.empty(), "sweep.values", "required");
    require(std::is_sorted(s.values.begin(), s.values.end()), "sweep.values", "must be ascending");
    require(s.values.front() >= 0, "sweep.values", "must not be negative");
    require(cfg.mode != RunMode::SamplingTournament, "sweep", "not available for the sampling baseline");
    cfg.sweep = s;
  }

  const json& sm = section(doc, "sampling");
  check_keys(sm, "sampling", {"candidates"});
  cfg.sampling_candidates = get(sm, "candidates", "sampling", cfg.sampling_candidates);
  require(cfg.sampling_candidates >= 2, "sampling.candidates", "must be at least 2");
  return cfg;
}

json persisted_document(const RunConfig& cfg) {
  json doc = cfg.document;
  for (const char* p : {"policy", "segmenter"}) {
    if (doc.contains(p) && doc[p].is_object() && doc[p].contains("auth_token") && !is_reference(doc[p]["auth_token"])) {
      doc[p]["auth_token"] = "<redacted>";
    }
  }
  std::string text = doc.dump();
  for (const auto& s : cfg.secrets()) text = redact(text, s);
  return json::parse(text);
}

void apply_scene_settings(const RunConfig& cfg, Scene2D& scene) {
  SceneOptions opts = scene.options;
  opts.step_decay = cfg.step_decay;
  opts.step_floor = cfg.step_floor;
  opts.step_initial = cfg.step_initial;
  scene = make_scene(scene.base, scene.labels, scene.region_mask, opts);
}

void apply_episode_settings(const RunConfig& cfg, EpisodeConfig& ep) {
  if (cfg.step_budget) ep.limits.step_budget = *cfg.step_budget;
  ep.limits.focus_budget = cfg.focus_budget;
  ep.limits.max_parse_failures = cfg.max_parse_failures;
  ep.limits.max_policy_calls = cfg.max_policy_calls;
  ep.chat.model = cfg.policy.model;
  ep.chat.temperature = cfg.policy.temperature;
  ep.chat.token_budget = cfg.token_budget;
}

}  // namespace imagine::cli
