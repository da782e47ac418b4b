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

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedDataset, what); }

Image load_image(const fs::path& p) {
  if (!fs::exists(p)) malformed("missing image " + p.string());
  try {
    return read_png(p);
  } catch (const Error& e) {
    malformed("unreadable image " + p.string() + ": " + e.what());
  }
}

// Gray masks decode directly; colour masks count any channel above half.
Mask load_mask(const fs::path& p) {
  if (!fs::exists(p)) malformed("missing mask " + p.string());
  try {
    const Bytes bytes = read_file(p);
    try {
      return decode_mask_png(bytes);
    } catch (const Error&) {
      const Image img = decode_png(bytes);
      Mask m(img.width(), img.height());
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
          const Rgba c = img.at(x, y);
          m.set(x, y, c[3] > 0 && (c[0] > 127 || c[1] > 127 || c[2] > 127));
        }
      }
      return m;
    }
  } catch (const Error& e) {
    malformed("unreadable mask " + p.string() + ": " + e.what());
  }
}

std::string safe_relative(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_string()) {
    malformed("line " + std::to_string(line) + ": missing string field '" + key + "'");
  }
  const std::string rel = j[key].get<std::string>();
  const fs::path p(rel);
  if (rel.empty() || p.is_absolute()) malformed("line " + std::to_string(line) + ": bad path in '" + key + "'");
  for (const auto& part : p) {
    if (part == "..") malformed("line " + std::to_string(line) + ": path escapes the dataset");
  }
  return rel;
}

}  // namespace

std::vector<ImportedCounting> import_clevr(const fs::path& dir) {
  const fs::path scenes_path = dir / "scenes.json";
  std::ifstream in(scenes_path);
  if (!in) malformed("missing " + scenes_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    malformed("scenes.json is not JSON: " + std::string(e.what()));
  }
  if (!doc.is_object() || !doc.contains("scenes") || !doc["scenes"].is_array()) {
    malformed("scenes.json needs a 'scenes' array");
  }
  std::vector<ImportedCounting> out;
  std::size_t i = 0;
  for (const json& s : doc["scenes"]) {
    ++i;
    if (!s.is_object() || !s.contains("objects") || !s["objects"].is_array()) {
      malformed("scene " + std::to_string(i) + " has no 'objects' array");
    }
    const std::string file = safe_relative(s, "image_filename", i);
    ImportedCounting item;
    item.id = fs::path(file).stem().string();
    item.base = load_image(dir / "images" / file);
    item.true_count = static_cast<int>(s["objects"].size());
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<PlacementInstance> import_where2place(const fs::path& dir) {
  const fs::path qpath = dir / "questions.jsonl";
  std::ifstream in(qpath);
  if (!in) malformed("missing " + qpath.string());
  std::vector<PlacementInstance> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      malformed("line " + std::to_string(n) + " is not JSON");
    }
    if (!j.is_object()) malformed("line " + std::to_string(n) + " is not an object");
    PlacementInstance inst;
    if (!j.contains("question") || !j["question"].is_string()) {
      malformed("line " + std::to_string(n) + ": missing string field 'question'");
    }
    inst.prompt = j["question"].get<std::string>();
    if (j.contains("id") && j["id"].is_number_unsigned()) inst.seed = j["id"].get<std::uint64_t>();
    inst.base = load_image(dir / "images" / safe_relative(j, "image", n));
    Mask region = load_mask(dir / "masks" / safe_relative(j, "mask", n));
    if (region.width() != inst.base.width() || region.height() != inst.base.height()) {
      malformed("line " + std::to_string(n) + ": mask size differs from the image");
    }
    inst.platform = Mask(inst.base.width(), inst.base.height(), true);
    inst.regions.push_back(std::move(region));
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace imagine
