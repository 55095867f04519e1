#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "depthprep/geom.hpp"
#include "depthprep/io.hpp"

namespace depthprep::io {

namespace detail {

inline void append_le32(std::string& out, std::uint32_t bits) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline std::uint32_t load_le32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

inline std::uint8_t color_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace detail

/// Binary little-endian PLY: float32 x y z, plus uchar red green blue when
/// the cloud carries colors.
inline std::string encode_ply(const geom::PointCloud& cloud) {
  cloud.validate();
  const bool colored = cloud.colors.has_value();
  std::string out = "ply\nformat binary_little_endian 1.0\nelement vertex " +
                    std::to_string(cloud.size()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n";
  if (colored) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  out.reserve(out.size() + cloud.size() * (colored ? 15 : 12));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      detail::append_le32(out, std::bit_cast<std::uint32_t>(static_cast<float>(cloud.points[i][a])));
    }
    if (colored) {
      for (float v : (*cloud.colors)[i]) out.push_back(static_cast<char>(detail::color_byte(v)));
    }
  }
  return out;
}

inline void write_ply(const geom::PointCloud& cloud, const fs::path& path) {
  detail::write_file(path, encode_ply(cloud));
}

/// Reads back the subset of PLY this library writes.
inline geom::PointCloud decode_ply(const std::string& bytes, const std::string& origin = "<memory>") {
  const std::string marker = "end_header\n";
  const auto header_end = bytes.find(marker);
  if (bytes.rfind("ply\n", 0) != 0 || header_end == std::string::npos) {
    throw ValidationError(origin + ": not a PLY file");
  }
  std::istringstream header(bytes.substr(0, header_end));
  std::string line;
  std::size_t count = 0;
  int props = 0;
  bool colored = false;
  bool binary_le = false;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw ValidationError(origin + ": unsupported PLY element " + name);
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      ++props;
      if (name == "red") colored = true;
    }
  }
  if (!binary_le) throw ValidationError(origin + ": only binary_little_endian PLY is supported");
  if (props != (colored ? 6 : 3)) throw ValidationError(origin + ": unsupported PLY layout");
  const std::size_t stride = colored ? 15 : 12;
  const std::size_t start = header_end + marker.size();
  if (bytes.size() < start + count * stride) throw ValidationError(origin + ": truncated PLY");

  geom::PointCloud cloud;
  cloud.points.reserve(count);
  if (colored) cloud.colors.emplace();
  const char* p = bytes.data() + start;
  for (std::size_t i = 0; i < count; ++i, p += stride) {
    geom::Point3 pt;
    for (int a = 0; a < 3; ++a) pt[a] = std::bit_cast<float>(detail::load_le32(p + 4 * a));
    cloud.points.push_back(pt);
    if (colored) {
      cloud.colors->push_back({static_cast<unsigned char>(p[12]) / 255.0f,
                               static_cast<unsigned char>(p[13]) / 255.0f,
                               static_cast<unsigned char>(p[14]) / 255.0f});
    }
  }
  return cloud;
}

inline geom::PointCloud read_ply(const fs::path& path) {
  return decode_ply(detail::read_file(path), path.string());
}

inline void write_distances_json(const geom::DistanceStats& stats, const fs::path& path) {
  detail::write_file(path, nlohmann::json(stats.per_point).dump() + "\n");
}

}  // namespace depthprep::io
