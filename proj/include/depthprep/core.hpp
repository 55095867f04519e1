#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace depthprep {

// Error hierarchy. Every failure in the library is reported by throwing one of
// these; the CLI maps them to a machine-readable error line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Row-major 2D grid. `Tag` makes rasters with the same element type but a
/// different meaning (definition vs. object mask) distinct types.
template <typename T, typename Tag>
class Raster {
 public:
  using value_type = T;

  Raster() = default;

  Raster(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {
    check_dims();
  }

  Raster(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims();
    if (data_.size() != width_ * height_) {
      throw DimensionMismatch("raster data length " + std::to_string(data_.size()) +
                              " != " + std::to_string(width_) + "x" + std::to_string(height_));
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  template <typename OtherT, typename OtherTag>
  bool same_shape(const Raster<OtherT, OtherTag>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster& a, const Raster& b) {
    if (a.width_ != b.width_ || a.height_ != b.height_) return false;
    for (std::size_t i = 0; i < a.data_.size(); ++i) {
      // NaN sentinels compare equal to each other.
      const T& x = a.data_[i];
      const T& y = b.data_[i];
      if constexpr (std::is_floating_point_v<T>) {
        if (std::isnan(x) && std::isnan(y)) continue;
      }
      if (!(x == y)) return false;
    }
    return true;
  }

 private:
  void check_dims() const {
    if (width_ == 0 || height_ == 0) throw DimensionMismatch("raster dimensions must be >= 1");
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

struct DepthTag {};
struct IntensityTag {};
struct DefinitionTag {};
struct ObjectTag {};

/// Depth in millimeters; undefined pixels hold `kUndefined`.
using DepthMap = Raster<float, DepthTag>;
/// Intensity normalized to [0, 1].
using IntensityMap = Raster<float, IntensityTag>;
/// 1 where the depth pixel was originally measured.
using DefinitionMap = Raster<std::uint8_t, DefinitionTag>;
/// 1 where the pixel belongs to the scanned object.
using ObjectMap = Raster<std::uint8_t, ObjectTag>;

inline constexpr float kUndefined = std::numeric_limits<float>::quiet_NaN();

inline bool is_defined(float depth) noexcept { return !std::isnan(depth); }

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.width()) + "x" +
                            std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                            std::to_string(b.height()));
  }
}

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct Sample {
  DepthMap hr_depth;
  IntensityMap intensity;
  DefinitionMap definition;
  std::optional<ObjectMap> object_map;
  std::optional<DepthMap> lr_depth;
  CameraIntrinsics intrinsics;
  std::size_t scale = 1;
  std::map<std::string, std::string> metadata;
};

inline DefinitionMap definition_map(const DepthMap& depth) {
  DefinitionMap out(depth.width(), depth.height(), 0);
  for (std::size_t i = 0; i < depth.size(); ++i) out[i] = is_defined(depth[i]) ? 1 : 0;
  return out;
}

template <typename Tag>
std::size_t count_ones(const Raster<std::uint8_t, Tag>& mask) {
  std::size_t n = 0;
  for (auto v : mask.data()) n += v != 0;
  return n;
}

// ---- validation ----------------------------------------------------------

inline void validate(const DepthMap& depth) {
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const float v = depth[i];
    if (is_defined(v) && !(std::isfinite(v) && v > 0.0f)) {
      throw ValidationError("depth pixel " + std::to_string(i) + " holds invalid value " +
                            std::to_string(v));
    }
  }
}

inline void validate(const IntensityMap& intensity) {
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    const float v = intensity[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw ValidationError("intensity pixel " + std::to_string(i) + " outside [0, 1]");
    }
  }
}

template <typename Tag>
void validate(const Raster<std::uint8_t, Tag>& mask) {
  for (auto v : mask.data()) {
    if (v > 1) throw ValidationError("binary mask holds a value other than 0/1");
  }
}

inline void validate(const CameraIntrinsics& k, std::size_t width, std::size_t height) {
  if (!(k.fx > 0.0 && k.fy > 0.0)) throw ValidationError("focal lengths must be positive");
  if (!(k.cx >= 0.0 && k.cx < static_cast<double>(width) && k.cy >= 0.0 &&
        k.cy < static_cast<double>(height))) {
    throw ValidationError("principal point outside the raster");
  }
}

/// Checks every cross-field invariant of a sample.
inline void validate(const Sample& s) {
  validate(s.hr_depth);
  validate(s.intensity);
  validate(s.definition);
  require_same_shape(s.hr_depth, s.intensity, "intensity vs depth");
  require_same_shape(s.hr_depth, s.definition, "definition vs depth");
  validate(s.intrinsics, s.hr_depth.width(), s.hr_depth.height());
  if (s.scale == 0 || s.hr_depth.width() % s.scale != 0 || s.hr_depth.height() % s.scale != 0) {
    throw ValidationError("scale " + std::to_string(s.scale) + " does not divide " +
                          std::to_string(s.hr_depth.width()) + "x" +
                          std::to_string(s.hr_depth.height()));
  }
  if (s.object_map) {
    validate(*s.object_map);
    require_same_shape(s.hr_depth, *s.object_map, "object map vs depth");
    for (std::size_t i = 0; i < s.object_map->size(); ++i) {
      if ((*s.object_map)[i] && !s.definition[i]) {
        throw ValidationError("object pixel " + std::to_string(i) + " is not defined");
      }
    }
  }
  if (s.lr_depth) {
    validate(*s.lr_depth);
    if (s.lr_depth->width() != s.hr_depth.width() / s.scale ||
        s.lr_depth->height() != s.hr_depth.height() / s.scale) {
      throw DimensionMismatch("low-resolution depth does not match hr / scale");
    }
  }
}

}  // namespace depthprep
