// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <json.hpp>

#include "imagine/error.hpp"
#include "imagine/png_io.hpp"
#include "imagine/scene2d.hpp"

namespace imagine {

using nlohmann::json;

std::string to_json(const SceneDescriptor& d) {
  json j = {{"width", d.width}, {"height", d.height}, {"base_image", d.base_image}};
  if (d.instance_map) j["instance_map"] = *d.instance_map;
  if (d.region_mask) j["region_mask"] = *d.region_mask;
  j["objects"] = json::array();
  for (const auto& o : d.objects) j["objects"].push_back({{"id", o.id}, {"mask", o.mask}, {"label", o.label}});
  return j.dump(2);
}

SceneDescriptor scene_descriptor_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SceneDescriptor d;
    d.width = j.at("width").get<int>();
    d.height = j.at("height").get<int>();
    d.base_image = j.at("base_image").get<std::string>();
    if (j.contains("instance_map")) d.instance_map = j["instance_map"].get<std::string>();
    if (j.contains("region_mask")) d.region_mask = j["region_mask"].get<std::string>();
    for (const auto& o : j.value("objects", json::array())) {
      d.objects.push_back({o.at("id").get<int>(), o.value("mask", ""), o.value("label", "")});
    }
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDataset, std::string("scene descriptor: ") + e.what());
  }
}

Scene2D load_scene(const SceneDescriptor& d, const std::filesystem::path& root, const SceneOptions& opts) {
  Image base = read_png(root / d.base_image);
  if (base.width() != d.width || base.height() != d.height) {
    throw Error(ErrorCode::MalformedDataset, "base image size differs from the descriptor canvas");
  }
  LabelMap labels;
  if (d.instance_map) labels = decode_label_png(read_file(root / *d.instance_map));
  std::optional<Mask> region;
  if (d.region_mask) region = decode_mask_png(read_file(root / *d.region_mask));
  return make_scene(std::move(base), std::move(labels), std::move(region), opts);
}

}  // namespace imagine
