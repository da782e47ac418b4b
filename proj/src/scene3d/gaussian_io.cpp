// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/gaussian_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include <json.hpp>

#include "imagine/error.hpp"

namespace imagine {

static_assert(std::endian::native == std::endian::little, "gaussian files are little-endian");

namespace {

constexpr const char* kFormat = "imagine-gaussians";
constexpr int kFloatsPerRecord = 14;

void put(Bytes& out, float v) {
  std::uint8_t b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

float get(const std::uint8_t* p) {
  float v;
  std::memcpy(&v, p, 4);
  return v;
}

Vec3 vec3(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::InvalidArgument, "expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

Bytes encode_gaussians(const GaussianScene& scene) {
  const nlohmann::json header = {{"format", kFormat},
                                 {"version", 1},
                                 {"count", scene.size()},
                                 {"record", {"cx", "cy", "cz", "sx", "sy", "sz", "qw", "qx", "qy", "qz", "opacity",
                                             "r", "g", "b"}}};
  const std::string text = header.dump() + "\n";
  Bytes out(text.begin(), text.end());
  out.reserve(out.size() + scene.size() * kFloatsPerRecord * 4);
  for (const auto& g : scene.gaussians) {
    for (int a = 0; a < 3; ++a) put(out, static_cast<float>(g.center[a]));
    for (int a = 0; a < 3; ++a) put(out, static_cast<float>(g.scale[a]));
    put(out, static_cast<float>(g.rotation.w()));
    put(out, static_cast<float>(g.rotation.x()));
    put(out, static_cast<float>(g.rotation.y()));
    put(out, static_cast<float>(g.rotation.z()));
    put(out, static_cast<float>(g.opacity));
    for (int a = 0; a < 3; ++a) put(out, static_cast<float>(g.color[a]));
  }
  return out;
}

GaussianScene decode_gaussians(std::span<const std::uint8_t> bytes) {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (nl == bytes.end()) throw Error(ErrorCode::InvalidArgument, "gaussian file has no header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin(), nl);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad gaussian header: ") + e.what());
  }
  if (header.value("format", "") != kFormat || header.value("version", 0) != 1) {
    throw Error(ErrorCode::InvalidArgument, "not an imagine gaussian file");
  }
  const auto count = header.at("count").get<std::size_t>();
  const std::size_t offset = static_cast<std::size_t>(nl - bytes.begin()) + 1;
  if (bytes.size() - offset != count * kFloatsPerRecord * 4) {
    throw Error(ErrorCode::InvalidArgument, "gaussian file size does not match its header");
  }
  GaussianScene scene;
  scene.gaussians.resize(count);
  const std::uint8_t* p = bytes.data() + offset;
  for (auto& g : scene.gaussians) {
    float f[kFloatsPerRecord];
    for (int k = 0; k < kFloatsPerRecord; ++k, p += 4) f[k] = get(p);
    g.center = Vec3(f[0], f[1], f[2]);
    g.scale = Vec3(f[3], f[4], f[5]);
    g.rotation = Eigen::Quaterniond(f[6], f[7], f[8], f[9]).normalized();
    g.opacity = f[10];
    g.color = Vec3(f[11], f[12], f[13]);
  }
  validate(scene);
  return scene;
}

void save_gaussians(const std::filesystem::path& path, const GaussianScene& scene) {
  write_file(path, encode_gaussians(scene));
}

GaussianScene load_gaussians(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  if (path.extension() == ".ply") return import_ply(bytes);
  return decode_gaussians(bytes);
}

GaussianScene import_ply(std::span<const std::uint8_t> bytes) {
  static const std::string kEnd = "end_header\n";
  const std::string head(reinterpret_cast<const char*>(bytes.data()), std::min<std::size_t>(bytes.size(), 65536));
  const auto end = head.find(kEnd);
  if (head.rfind("ply\n", 0) != 0 || end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "not a PLY file");
  }
  std::istringstream in(head.substr(0, end));
  static const std::map<std::string, int> kSizes = {{"char", 1},  {"uchar", 1},  {"int8", 1},   {"uint8", 1},
                                                    {"short", 2}, {"ushort", 2}, {"int16", 2},  {"uint16", 2},
                                                    {"int", 4},   {"uint", 4},   {"int32", 4},  {"uint32", 4},
                                                    {"float", 4}, {"float32", 4}, {"double", 8}, {"float64", 8}};
  std::size_t count = 0;
  bool in_vertex = false;
  bool binary_le = false;
  std::size_t stride = 0;
  std::map<std::string, std::size_t> float_at;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (kw == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> count;
    } else if (kw == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      const auto it = kSizes.find(type);
      if (type == "list" || it == kSizes.end()) throw Error(ErrorCode::InvalidArgument, "unsupported PLY property");
      if (it->second == 4 && (type == "float" || type == "float32")) float_at[name] = stride;
      stride += static_cast<std::size_t>(it->second);
    }
  }
  if (!binary_le) throw Error(ErrorCode::InvalidArgument, "only binary little-endian PLY is supported");
  for (const char* name : {"x", "y", "z", "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2",
                           "rot_3", "f_dc_0", "f_dc_1", "f_dc_2"}) {
    if (!float_at.count(name)) throw Error(ErrorCode::InvalidArgument, std::string("PLY lacks property ") + name);
  }
  const std::size_t body = end + kEnd.size();
  if (bytes.size() < body + count * stride) throw Error(ErrorCode::InvalidArgument, "PLY body is truncated");

  constexpr double kShC0 = 0.28209479177387814;
  GaussianScene scene;
  scene.gaussians.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* rec = bytes.data() + body + i * stride;
    auto f = [&](const char* name) { return static_cast<double>(get(rec + float_at.at(name))); };
    Gaussian3D& g = scene.gaussians[i];
    g.center = Vec3(f("x"), f("y"), f("z"));
    g.scale = Vec3(std::exp(f("scale_0")), std::exp(f("scale_1")), std::exp(f("scale_2")));
    g.rotation = Eigen::Quaterniond(f("rot_0"), f("rot_1"), f("rot_2"), f("rot_3")).normalized();
    g.opacity = 1.0 / (1.0 + std::exp(-f("opacity")));
    g.color = (Vec3(f("f_dc_0"), f("f_dc_1"), f("f_dc_2")) * kShC0 + Vec3::Constant(0.5)).cwiseMax(0.0).cwiseMin(1.0);
  }
  validate(scene);
  return scene;
}

std::string cameras_to_json(const std::vector<Camera>& cams) {
  nlohmann::json arr = nlohmann::json::array();
  auto v = [](const Vec3& p) { return nlohmann::json::array({p.x(), p.y(), p.z()}); };
  for (const auto& c : cams) {
    arr.push_back({{"position", v(c.position)},
                   {"look_at", v(c.look_at)},
                   {"up", v(c.up)},
                   {"fov", c.vertical_fov},
                   {"width", c.width},
                   {"height", c.height}});
  }
  return arr.dump(2);
}

std::vector<Camera> cameras_from_json(const std::string& text) {
  std::vector<Camera> out;
  try {
    for (const auto& j : nlohmann::json::parse(text)) {
      Camera c;
      c.position = vec3(j.at("position"));
      c.look_at = vec3(j.at("look_at"));
      c.up = vec3(j.at("up"));
      c.vertical_fov = j.at("fov").get<double>();
      c.width = j.at("width").get<int>();
      c.height = j.at("height").get<int>();
      c.validate();
      out.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad camera trajectory: ") + e.what());
  }
  return out;
}

}  // namespace imagine
