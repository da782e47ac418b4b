// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include <json.hpp>

#include "imagine/error.hpp"
#include "imagine/png_io.hpp"
#include "imagine/tasks.hpp"

namespace imagine {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSchema = "imagine-instance";
constexpr int kVersion = 1;

json rect_json(const Rect& r) { return {r.x0, r.y0, r.x1, r.y1}; }
Rect rect_from(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 4) throw Error(ErrorCode::MalformedDataset, "rect needs four numbers");
  return {v[0], v[1], v[2], v[3]};
}
json point_json(PixelPoint p) { return {p.x, p.y}; }
PixelPoint point_from(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 2) throw Error(ErrorCode::MalformedDataset, "point needs two numbers");
  return {v[0], v[1]};
}

json objects_json(const std::vector<ObjectInfo>& objects) {
  json arr = json::array();
  for (const auto& o : objects) {
    arr.push_back({{"id", o.id},
                   {"shape", shape_name(o.shape)},
                   {"color", o.color},
                   {"bbox", rect_json(o.bbox)},
                   {"area", o.area},
                   {"visible", o.visible}});
  }
  return arr;
}

std::vector<ObjectInfo> objects_from(const json& arr) {
  std::vector<ObjectInfo> out;
  for (const json& j : arr) {
    ObjectInfo o;
    o.id = j.at("id").get<int>();
    const std::string s = j.at("shape").get<std::string>();
    bool known = false;
    for (ShapeKind k : {ShapeKind::Circle, ShapeKind::Square, ShapeKind::Star}) {
      if (shape_name(k) == s) {
        o.shape = k;
        known = true;
      }
    }
    if (!known) throw Error(ErrorCode::MalformedDataset, "unknown shape " + s);
    o.color = j.at("color").get<std::string>();
    o.bbox = rect_from(j.at("bbox"));
    o.area = j.at("area").get<std::size_t>();
    o.visible = j.at("visible").get<std::size_t>();
    out.push_back(std::move(o));
  }
  return out;
}

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  std::string image(const std::string& name, const Image& img) {
    write_file(dir_ / name, encode_png(img));
    return name;
  }
  std::string mask(const std::string& name, const Mask& m) {
    write_file(dir_ / name, encode_mask_png(m));
    return name;
  }
  json labels(const std::string& name, const LabelMap& l) {
    if (l.empty()) return nullptr;
    write_file(dir_ / name, encode_label_png(l));
    return name;
  }

 private:
  fs::path dir_;
};

class Reader {
 public:
  explicit Reader(fs::path dir) : dir_(std::move(dir)) {}
  Image image(const json& name) const { return read_png(path(name)); }
  Mask mask(const json& name) const { return decode_mask_png(read_file(path(name))); }
  LabelMap labels(const json& name) const {
    if (name.is_null()) return {};
    return decode_label_png(read_file(path(name)));
  }

 private:
  fs::path path(const json& name) const {
    const fs::path rel(name.get<std::string>());
    if (rel.is_absolute() || rel.has_parent_path()) throw Error(ErrorCode::MalformedDataset, "bundle paths must be plain file names");
    const fs::path p = dir_ / rel;
    if (!fs::exists(p)) throw Error(ErrorCode::MalformedDataset, "bundle is missing " + rel.string());
    return p;
  }
  fs::path dir_;
};

}  // namespace

TaskKind task_kind_of(const TaskInstance& inst) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CountingInstance>) return TaskKind::Counting;
        if constexpr (std::is_same_v<T, JigsawInstance>) return TaskKind::Jigsaw;
        if constexpr (std::is_same_v<T, PlacementInstance>) return TaskKind::Placement;
        if constexpr (std::is_same_v<T, QaInstance>) return TaskKind::QA;
      },
      inst);
}

void save_instance(const fs::path& dir, const TaskInstance& inst) {
  Writer w(dir);
  json j = {{"schema", kSchema}, {"version", kVersion}, {"task", task_kind_name(task_kind_of(inst))}};
  if (const auto* c = std::get_if<CountingInstance>(&inst)) {
    j["seed"] = c->seed;
    j["n"] = c->n;
    j["base"] = w.image("base.png", c->base);
    j["labels"] = w.labels("labels.png", c->labels);
    j["reference"] = w.image("reference.png", c->reference);
    j["objects"] = objects_json(c->objects);
  } else if (const auto* g = std::get_if<JigsawInstance>(&inst)) {
    j["seed"] = g->seed;
    j["rows"] = g->rows;
    j["cols"] = g->cols;
    j["cell"] = g->cell;
    j["source"] = w.image("source.png", g->source);
    j["base"] = w.image("base.png", g->base);
    j["labels"] = w.labels("labels.png", g->labels);
    j["snap_radius"] = g->snap_radius;
    j["attempts_budget"] = g->attempts_budget;
    j["step_budget"] = g->step_budget;
    json pieces = json::array();
    for (const auto& p : g->pieces) {
      pieces.push_back({{"id", p.id},
                        {"row", p.row},
                        {"col", p.col},
                        {"tray_offset", point_json(p.tray_offset)},
                        {"slot_offset", point_json(p.slot_offset)},
                        {"slot_center", point_json(p.slot_center)}});
    }
    j["pieces"] = pieces;
  } else if (const auto* p = std::get_if<PlacementInstance>(&inst)) {
    j["seed"] = p->seed;
    j["base"] = w.image("base.png", p->base);
    j["labels"] = w.labels("labels.png", p->labels);
    j["platform"] = w.mask("platform.png", p->platform);
    json regions = json::array();
    for (std::size_t i = 0; i < p->regions.size(); ++i) {
      regions.push_back(w.mask("region_" + std::to_string(i) + ".png", p->regions[i]));
    }
    j["regions"] = regions;
    j["target_id"] = p->target_id;
    j["anchor_id"] = p->anchor_id;
    j["relation"] = p->relation;
    j["prompt"] = p->prompt;
    j["objects"] = objects_json(p->objects);
    j["step_budget"] = p->step_budget;
  } else if (const auto* q = std::get_if<QaInstance>(&inst)) {
    j["seed"] = q->seed;
    j["base"] = w.image("base.png", q->base);
    j["labels"] = w.labels("labels.png", q->labels);
    j["objects"] = objects_json(q->objects);
    j["question"] = q->question;
    j["truth"] = q->truth;
    j["queried_id"] = q->queried_id ? json(*q->queried_id) : json(nullptr);
    j["step_budget"] = q->step_budget;
  }
  std::ofstream out(dir / "instance.json", std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "instance.json").string());
}

TaskInstance load_instance(const fs::path& dir) {
  const fs::path path = dir / "instance.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedDataset, "missing " + path.string());
  try {
    const json j = json::parse(in);
    if (j.value("schema", "") != kSchema || j.value("version", 0) != kVersion) {
      throw Error(ErrorCode::MalformedDataset, "not an instance bundle (version " + std::to_string(kVersion) + ")");
    }
    const auto kind = task_kind_from_name(j.at("task").get<std::string>());
    if (!kind) throw Error(ErrorCode::MalformedDataset, "unknown task in bundle");
    const Reader r(dir);
    switch (*kind) {
      case TaskKind::Counting: {
        CountingInstance c;
        c.seed = j.at("seed").get<std::uint64_t>();
        c.n = j.at("n").get<int>();
        c.base = r.image(j.at("base"));
        c.labels = r.labels(j.at("labels"));
        c.reference = r.image(j.at("reference"));
        c.objects = objects_from(j.at("objects"));
        return c;
      }
      case TaskKind::Jigsaw: {
        JigsawInstance g;
        g.seed = j.at("seed").get<std::uint64_t>();
        g.rows = j.at("rows").get<int>();
        g.cols = j.at("cols").get<int>();
        g.cell = j.at("cell").get<int>();
        g.source = r.image(j.at("source"));
        g.base = r.image(j.at("base"));
        g.labels = r.labels(j.at("labels"));
        g.snap_radius = j.at("snap_radius").get<double>();
        g.attempts_budget = j.at("attempts_budget").get<int>();
        g.step_budget = j.at("step_budget").get<int>();
        for (const json& p : j.at("pieces")) {
          g.pieces.push_back({p.at("id").get<int>(), p.at("row").get<int>(), p.at("col").get<int>(),
                              point_from(p.at("tray_offset")), point_from(p.at("slot_offset")),
                              point_from(p.at("slot_center"))});
        }
        return g;
      }
      case TaskKind::Placement: {
        PlacementInstance p;
        p.seed = j.at("seed").get<std::uint64_t>();
        p.base = r.image(j.at("base"));
        p.labels = r.labels(j.at("labels"));
        p.platform = r.mask(j.at("platform"));
        for (const json& m : j.at("regions")) p.regions.push_back(r.mask(m));
        p.target_id = j.at("target_id").get<int>();
        p.anchor_id = j.at("anchor_id").get<int>();
        p.relation = j.at("relation").get<std::string>();
        p.prompt = j.at("prompt").get<std::string>();
        p.objects = objects_from(j.at("objects"));
        p.step_budget = j.at("step_budget").get<int>();
        return p;
      }
      case TaskKind::QA: {
        QaInstance q;
        q.seed = j.at("seed").get<std::uint64_t>();
        q.base = r.image(j.at("base"));
        q.labels = r.labels(j.at("labels"));
        q.objects = objects_from(j.at("objects"));
        q.question = j.at("question").get<std::string>();
        q.truth = j.at("truth").get<std::string>();
        if (!j.at("queried_id").is_null()) q.queried_id = j["queried_id"].get<int>();
        q.step_budget = j.at("step_budget").get<int>();
        return q;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDataset, std::string("malformed instance.json: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedDataset) throw;
    throw Error(ErrorCode::MalformedDataset, std::string("unreadable bundle: ") + e.what());
  }
  throw Error(ErrorCode::MalformedDataset, "unreachable task kind");
}

}  // namespace imagine
