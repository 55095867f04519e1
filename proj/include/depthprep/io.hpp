#pragma once

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "depthprep/core.hpp"

namespace depthprep::io {

namespace fs = std::filesystem;

inline constexpr const char* kDepthHrFile = "depth_hr.pfm";
inline constexpr const char* kIntensityFile = "intensity.png";
inline constexpr const char* kDefinitionFile = "definition.png";
inline constexpr const char* kObjectFile = "object.png";
inline constexpr const char* kDepthLrFile = "depth_lr.pfm";
inline constexpr const char* kMetaFile = "meta.json";

namespace detail {

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

}  // namespace detail

// ---- PFM -----------------------------------------------------------------
//
// Grayscale "Pf" variant. Rows are stored bottom-to-top as the format
// requires; a negative scale marks little-endian payloads. Undefined depth is
// written as 0.0 and mapped back to the in-memory sentinel on read.

inline std::string encode_pfm(const DepthMap& depth) {
  std::string out = "Pf\n" + std::to_string(depth.width()) + " " +
                    std::to_string(depth.height()) + "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + depth.size() * 4);
  char* dst = out.data() + header;
  for (std::size_t r = 0; r < depth.height(); ++r) {
    const std::size_t src_row = depth.height() - 1 - r;
    for (std::size_t c = 0; c < depth.width(); ++c) {
      float v = depth(src_row, c);
      if (!is_defined(v)) v = 0.0f;
      std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = detail::byteswap32(bits);
      std::memcpy(dst, &bits, 4);
      dst += 4;
    }
  }
  return out;
}

inline DepthMap decode_pfm(const std::string& bytes, const std::string& origin = "<memory>") {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  const std::string magic = next_token();
  if (magic != "Pf") throw ValidationError(origin + ": not a grayscale PFM (magic '" + magic + "')");
  std::size_t width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoul(next_token());
    height = std::stoul(next_token());
    scale = std::stod(next_token());
  } catch (const std::exception&) {
    throw ValidationError(origin + ": malformed PFM header");
  }
  if (width == 0 || height == 0 || scale == 0.0) {
    throw ValidationError(origin + ": malformed PFM header");
  }
  // exactly one whitespace byte separates the header from the payload
  ++pos;
  const std::size_t payload = width * height * 4;
  if (bytes.size() < pos + payload) throw ValidationError(origin + ": truncated PFM payload");
  const bool file_little = scale < 0.0;
  const bool swap = file_little != (std::endian::native == std::endian::little);

  std::vector<float> data(width * height);
  const char* src = bytes.data() + pos;
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t dst_row = height - 1 - r;
    for (std::size_t c = 0; c < width; ++c) {
      std::uint32_t bits;
      std::memcpy(&bits, src, 4);
      src += 4;
      if (swap) bits = detail::byteswap32(bits);
      const float v = std::bit_cast<float>(bits);
      if (!std::isfinite(v)) throw ValidationError(origin + ": non-finite value in PFM payload");
      data[dst_row * width + c] = v == 0.0f ? kUndefined : v;
    }
  }
  DepthMap depth(width, height, std::move(data));
  try {
    validate(depth);
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return depth;
}

inline void write_pfm(const DepthMap& depth, const fs::path& path) {
  detail::write_file(path, encode_pfm(depth));
}

inline DepthMap read_pfm(const fs::path& path) {
  return decode_pfm(detail::read_file(path), path.string());
}

// ---- PNG (grayscale, 8 or 16 bit) ----------------------------------------

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;
};

inline GrayImage read_png_gray(const fs::path& path) {
  std::unique_ptr<FILE, decltype(&std::fclose)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw IoError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed for " + path.string());
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed for " + path.string());
  }

  GrayImage img;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError(path.string() + ": malformed PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError(path.string() + ": PNG is not single-channel grayscale");
  }
  if (depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * height);
  rows.resize(height);
  for (std::size_t r = 0; r < height; ++r) rows[r] = buffer.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img.width = width;
  img.height = height;
  img.bit_depth = depth;
  img.pixels.resize(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (depth == 16) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      img.pixels[i] = v;
    } else {
      img.pixels[i] = buffer[i];
    }
  }
  return img;
}

inline void write_png_gray(const GrayImage& img, const fs::path& path) {
  std::unique_ptr<FILE, decltype(&std::fclose)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed for " + path.string());
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed for " + path.string());
  }
  const int depth = img.bit_depth;
  const std::size_t bpp = depth == 16 ? 2 : 1;
  std::vector<std::uint8_t> buffer(img.width * img.height * bpp);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (depth == 16) {
      buffer[2 * i] = static_cast<std::uint8_t>(img.pixels[i] >> 8);  // PNG is big-endian
      buffer[2 * i + 1] = static_cast<std::uint8_t>(img.pixels[i] & 0xff);
    } else {
      buffer[i] = static_cast<std::uint8_t>(img.pixels[i]);
    }
  }
  std::vector<png_bytep> rows(img.height);
  for (std::size_t r = 0; r < img.height; ++r) rows[r] = buffer.data() + r * img.width * bpp;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Intensity is stored as 16-bit PNG; any source bit depth maps linearly to [0, 1].
inline IntensityMap read_intensity_png(const fs::path& path) {
  const GrayImage img = read_png_gray(path);
  const float max = img.bit_depth == 16 ? 65535.0f : 255.0f;
  std::vector<float> data(img.pixels.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(img.pixels[i]) / max;
  return IntensityMap(img.width, img.height, std::move(data));
}

/// Rounds to the nearest 16-bit level, so values of the form q/65535 round-trip exactly.
inline std::uint16_t quantize_intensity(float v) {
  const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(clamped * 65535.0));
}

inline float dequantize_intensity(std::uint16_t q) { return static_cast<float>(q) / 65535.0f; }

inline void write_intensity_png(const IntensityMap& intensity, const fs::path& path) {
  validate(intensity);
  GrayImage img{intensity.width(), intensity.height(), 16, {}};
  img.pixels.resize(intensity.size());
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    img.pixels[i] = quantize_intensity(intensity[i]);
  }
  write_png_gray(img, path);
}

template <typename Tag>
Raster<std::uint8_t, Tag> read_mask_png(const fs::path& path) {
  const GrayImage img = read_png_gray(path);
  if (img.bit_depth != 8) throw ValidationError(path.string() + ": mask PNG must be 8-bit");
  std::vector<std::uint8_t> data(img.pixels.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto v = img.pixels[i];
    if (v != 0 && v != 255) {
      throw ValidationError(path.string() + ": mask value " + std::to_string(v) +
                            " is neither 0 nor 255");
    }
    data[i] = v ? 1 : 0;
  }
  return Raster<std::uint8_t, Tag>(img.width, img.height, std::move(data));
}

template <typename Tag>
void write_mask_png(const Raster<std::uint8_t, Tag>& mask, const fs::path& path) {
  GrayImage img{mask.width(), mask.height(), 8, {}};
  img.pixels.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) img.pixels[i] = mask[i] ? 255 : 0;
  write_png_gray(img, path);
}

// ---- meta.json -------------------------------------------------------------

struct Meta {
  CameraIntrinsics intrinsics;
  std::size_t scale = 1;
  std::map<std::string, std::string> tags;
};

inline nlohmann::json meta_to_json(const Meta& meta) {
  nlohmann::json j;
  j["fx"] = meta.intrinsics.fx;
  j["fy"] = meta.intrinsics.fy;
  j["cx"] = meta.intrinsics.cx;
  j["cy"] = meta.intrinsics.cy;
  j["scale"] = meta.scale;
  j["tags"] = nlohmann::json::object();
  for (const auto& [k, v] : meta.tags) j["tags"][k] = v;
  return j;
}

inline Meta meta_from_json(const nlohmann::json& j, const std::string& origin) {
  Meta meta;
  try {
    meta.intrinsics.fx = j.at("fx").get<double>();
    meta.intrinsics.fy = j.at("fy").get<double>();
    meta.intrinsics.cx = j.at("cx").get<double>();
    meta.intrinsics.cy = j.at("cy").get<double>();
    meta.scale = j.at("scale").get<std::size_t>();
    if (j.contains("tags")) {
      for (const auto& [k, v] : j.at("tags").items()) {
        meta.tags[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(origin + ": malformed meta: " + e.what());
  }
  return meta;
}

inline void write_meta(const Meta& meta, const fs::path& path) {
  detail::write_file(path, meta_to_json(meta).dump(2) + "\n");
}

inline Meta read_meta(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return meta_from_json(j, path.string());
}

// ---- sample directories ---------------------------------------------------

inline void write_sample(const Sample& sample, const fs::path& dir) {
  validate(sample);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_pfm(sample.hr_depth, dir / kDepthHrFile);
  write_intensity_png(sample.intensity, dir / kIntensityFile);
  write_mask_png(sample.definition, dir / kDefinitionFile);
  if (sample.object_map) write_mask_png(*sample.object_map, dir / kObjectFile);
  if (sample.lr_depth) write_pfm(*sample.lr_depth, dir / kDepthLrFile);
  write_meta(Meta{sample.intrinsics, sample.scale, sample.metadata}, dir / kMetaFile);
}

/// Reads a sample directory. `object.png` and `depth_lr.pfm` are optional
/// (absent until the sample has been prepared); the rest are required.
inline Sample read_sample(const fs::path& dir) {
  auto required = [&](const char* name) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw IoError("missing file " + p.string());
    return p;
  };
  Sample s;
  s.hr_depth = read_pfm(required(kDepthHrFile));
  s.intensity = read_intensity_png(required(kIntensityFile));
  s.definition = read_mask_png<DefinitionTag>(required(kDefinitionFile));
  const Meta meta = read_meta(required(kMetaFile));
  s.intrinsics = meta.intrinsics;
  s.scale = meta.scale;
  s.metadata = meta.tags;
  if (fs::exists(dir / kObjectFile)) s.object_map = read_mask_png<ObjectTag>(dir / kObjectFile);
  if (fs::exists(dir / kDepthLrFile)) s.lr_depth = read_pfm(dir / kDepthLrFile);

  auto check = [&](const auto& raster, const char* name) {
    if (!raster.same_shape(s.hr_depth)) {
      throw DimensionMismatch((dir / name).string() + ": " + std::to_string(raster.width()) + "x" +
                              std::to_string(raster.height()) + " does not match depth " +
                              std::to_string(s.hr_depth.width()) + "x" +
                              std::to_string(s.hr_depth.height()));
    }
  };
  check(s.intensity, kIntensityFile);
  check(s.definition, kDefinitionFile);
  if (s.object_map) check(*s.object_map, kObjectFile);
  try {
    validate(s);
  } catch (const Error& e) {
    throw ValidationError(dir.string() + ": " + e.what());
  }
  return s;
}

}  // namespace depthprep::io
