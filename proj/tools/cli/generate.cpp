// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>

#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "imagine/error.hpp"

namespace imagine::cli {

namespace fs = std::filesystem;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::SchemaMismatch, path.string() + " is not valid JSON");
  return doc;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

void prepare_output_dir(const fs::path& dir, const std::string& marker, const std::string& schema) {
  if (dir.empty()) throw Error(ErrorCode::InvalidArgument, "output: required");
  if (fs::exists(dir) && !fs::is_directory(dir)) {
    throw Error(ErrorCode::Io, dir.string() + " exists and is not a directory");
  }
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    const fs::path m = dir / marker;
    bool ours = false;
    if (fs::exists(m)) {
      const json doc = json::parse(std::ifstream(m), nullptr, false);
      ours = !doc.is_discarded() && doc.is_object() && doc.value("schema", "") == schema;
    }
    if (!ours) throw Error(ErrorCode::Io, dir.string() + " is not empty and holds no earlier " + schema + " output");
    for (const char* sub : {"instances", "traces", "images"}) fs::remove_all(dir / sub);
  }
  fs::create_directories(dir);
}

Manifest read_manifest(const fs::path& dataset) {
  const json doc = read_json(dataset / "manifest.json");
  if (!doc.is_object() || doc.value("schema", "") != kDatasetSchema || doc.value("version", 0) != kFormatVersion) {
    throw Error(ErrorCode::SchemaMismatch, (dataset / "manifest.json").string() + " is not a dataset manifest");
  }
  Manifest m;
  m.document = doc;
  try {
    const auto task = task_kind_from_name(doc.at("task").get<std::string>());
    if (!task) throw Error(ErrorCode::SchemaMismatch, "unknown task in manifest");
    m.task = *task;
    m.source = doc.at("source").get<std::string>();
    for (const auto& e : doc.at("instances")) {
      m.entries.push_back({e.at("id").get<std::string>(), e.at("dir").get<std::string>(),
                           e.at("seed").get<std::uint64_t>(), e.value("params", json::object())});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

TaskInstance generate_instance(TaskKind task, const json& p, std::uint64_t seed) {
  try {
    switch (task) {
      case TaskKind::Counting: {
        CountingOptions o;
        o.width = p.value("width", o.width);
        o.height = p.value("height", o.height);
        return gen_counting(seed, p.at("n").get<int>(), o);
      }
      case TaskKind::Jigsaw:
        return gen_jigsaw(seed, p.at("rows").get<int>(), p.at("cols").get<int>(), p.at("missing").get<int>());
      case TaskKind::Placement: {
        PlacementOptions o;
        o.width = p.value("width", o.width);
        o.height = p.value("height", o.height);
        o.n_objects = p.value("n_objects", o.n_objects);
        return gen_placement(seed, o);
      }
      case TaskKind::QA: {
        QaOptions o;
        o.width = p.value("width", o.width);
        o.height = p.value("height", o.height);
        o.absent_probability = p.value("absent_probability", o.absent_probability);
        return gen_multiobject_qa(seed, p.at("n_objects").get<int>(), o);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("bad generator parameters: ") + e.what());
  }
  throw Error(ErrorCode::InvalidArgument, "unknown task");
}

namespace {

std::vector<std::pair<json, std::string>> synthetic_plan(const RunConfig& cfg) {
  const GeneratorParams& g = cfg.generator;
  std::vector<std::pair<json, std::string>> out;  // params, id stem
  const std::string task(task_kind_name(cfg.task));
  switch (cfg.task) {
    case TaskKind::Counting:
      for (int n : g.counts) {
        for (int k = 0; k < g.per_count; ++k) {
          out.push_back({{{"n", n}, {"width", g.width}, {"height", g.height}}, task});
        }
      }
      break;
    case TaskKind::Jigsaw:
      for (const auto& [rows, cols] : g.grids) {
        for (int m : g.missing) {
          for (int k = 0; k < g.per_combo; ++k) out.push_back({{{"rows", rows}, {"cols", cols}, {"missing", m}}, task});
        }
      }
      break;
    case TaskKind::Placement:
      for (int k = 0; k < g.count; ++k) {
        out.push_back({{{"n_objects", g.n_objects}, {"width", g.width}, {"height", g.height}}, task});
      }
      break;
    case TaskKind::QA:
      for (int k = 0; k < g.count; ++k) {
        const int n = g.qa_objects[static_cast<std::size_t>(k) % g.qa_objects.size()];
        out.push_back({{{"n_objects", n},
                        {"width", g.width},
                        {"height", g.height},
                        {"absent_probability", g.absent_probability}},
                       task});
      }
      break;
  }
  return out;
}

std::string numbered(const std::string& stem, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return stem + "-" + buf;
}

}  // namespace

Manifest cmd_generate(const RunConfig& cfg) {
  prepare_output_dir(cfg.output, "manifest.json", kDatasetSchema);
  Manifest m;
  m.task = cfg.task;
  m.source = cfg.import ? cfg.import->format : "synthetic";
  json instances = json::array();
  auto add = [&](const TaskInstance& inst, DatasetEntry e) {
    save_instance(cfg.output / e.dir, inst);
    instances.push_back({{"id", e.id}, {"dir", e.dir}, {"seed", e.seed}, {"params", e.params}});
    m.entries.push_back(std::move(e));
  };

  if (!cfg.import) {
    const auto plan = synthetic_plan(cfg);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const std::string id = numbered(plan[i].second, i);
      const std::uint64_t seed = cfg.seed + i;
      add(generate_instance(cfg.task, plan[i].first, seed), {id, "instances/" + id, seed, plan[i].first});
    }
  } else if (cfg.import->format == "clevr") {
    const auto scenes = import_clevr(cfg.import->dir);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      CountingInstance c;
      c.n = scenes[i].true_count;
      c.base = scenes[i].base;
      const std::string id = numbered("clevr", i);
      add(c, {id, "instances/" + id, 0, {{"source_id", scenes[i].id}, {"n", c.n}}});
    }
  } else {
    const auto items = import_where2place(cfg.import->dir);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::string id = numbered("where2place", i);
      add(items[i], {id, "instances/" + id, 0, {{"prompt", items[i].prompt}}});
    }
  }

  m.document = {{"schema", kDatasetSchema},
                {"version", kFormatVersion},
                {"task", task_kind_name(cfg.task)},
                {"source", m.source},
                {"generator_version", kGeneratorVersion},
                {"seed", cfg.seed},
                {"count", m.entries.size()},
                {"instances", instances}};
  write_json(cfg.output / "manifest.json", m.document);
  write_json(cfg.output / "config.json", persisted_document(cfg));
  spdlog::info("wrote {} {} instances to {}", m.entries.size(), task_kind_name(cfg.task), cfg.output.string());
  return m;
}

}  // namespace imagine::cli
