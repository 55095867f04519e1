#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "depthprep/core.hpp"

namespace depthprep::prep {

enum class Connectivity { Four = 4, Eight = 8 };

struct LabelTag {};
using LabelMap = Raster<std::uint32_t, LabelTag>;

/// Connected components of undefined pixels. Label 0 marks a defined pixel;
/// labels 1..hole_count enumerate holes in raster-scan order of their first pixel.
struct HoleLabeling {
  LabelMap labels;
  std::set<std::uint32_t> background_ids;
  std::uint32_t hole_count = 0;

  bool is_background(std::uint32_t id) const { return background_ids.contains(id); }
};

struct FillConfig {
  /// Constant written into holes that touch the raster border (mm).
  float background_value_depth = 1000.0f;
  float background_value_intensity = 1.0f;
  Connectivity connectivity = Connectivity::Four;

  void validate() const {
    if (!(background_value_depth > 0.0f)) {
      throw ValidationError("background depth value must be positive");
    }
    if (!(background_value_intensity >= 0.0f && background_value_intensity <= 1.0f)) {
      throw ValidationError("background intensity value must lie in [0, 1]");
    }
  }
};

inline constexpr float kDefaultTau = 5.0f;

// ---- downsampling -----------------------------------------------------------

/// Collapses every s x s block to one pixel without interpolating. A block
/// whose defined values span at most `tau` mm keeps the defined pixel closest
/// to the block center; a block that straddles a depth edge keeps its minimum
/// (the foreground), so silhouettes stay sharp.
inline DepthMap downsample(const DepthMap& depth, std::size_t s, float tau = kDefaultTau) {
  if (s == 0) throw ValidationError("down-sample factor must be positive");
  if (depth.width() % s != 0 || depth.height() % s != 0) {
    throw ValidationError("down-sample factor " + std::to_string(s) + " does not divide " +
                          std::to_string(depth.width()) + "x" + std::to_string(depth.height()));
  }
  const std::size_t out_w = depth.width() / s;
  const std::size_t out_h = depth.height() / s;
  DepthMap out(out_w, out_h, kUndefined);
  const long center2 = static_cast<long>(s) - 1;  // twice the block-center offset

  for (std::size_t br = 0; br < out_h; ++br) {
    for (std::size_t bc = 0; bc < out_w; ++bc) {
      float lo = std::numeric_limits<float>::infinity();
      float hi = -std::numeric_limits<float>::infinity();
      float nearest = kUndefined;
      long best_d2 = std::numeric_limits<long>::max();
      for (std::size_t r = 0; r < s; ++r) {
        for (std::size_t c = 0; c < s; ++c) {
          const float v = depth(br * s + r, bc * s + c);
          if (!is_defined(v)) continue;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
          const long dr = 2 * static_cast<long>(r) - center2;
          const long dc = 2 * static_cast<long>(c) - center2;
          const long d2 = dr * dr + dc * dc;
          if (d2 < best_d2) {  // strict: first in row-major order wins ties
            best_d2 = d2;
            nearest = v;
          }
        }
      }
      if (!is_defined(nearest)) continue;
      out(br, bc) = (hi - lo) <= tau ? nearest : lo;
    }
  }
  return out;
}

// ---- hole labeling ------------------------------------------------------------

inline HoleLabeling classify_holes(const DefinitionMap& definition,
                                   Connectivity connectivity = Connectivity::Four) {
  const std::size_t w = definition.width();
  const std::size_t h = definition.height();
  HoleLabeling out{LabelMap(w, h, 0u), {}, 0};
  std::vector<std::size_t> stack;

  static constexpr int kOffsets[8][2] = {{-1, 0}, {1, 0},  {0, -1}, {0, 1},
                                         {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  const int neighbors = connectivity == Connectivity::Four ? 4 : 8;

  for (std::size_t seed = 0; seed < definition.size(); ++seed) {
    if (definition[seed] || out.labels[seed] != 0) continue;
    const std::uint32_t id = ++out.hole_count;
    bool touches_border = false;
    out.labels[seed] = id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const long r = static_cast<long>(p / w);
      const long c = static_cast<long>(p % w);
      if (r == 0 || c == 0 || r + 1 == static_cast<long>(h) || c + 1 == static_cast<long>(w)) {
        touches_border = true;
      }
      for (int k = 0; k < neighbors; ++k) {
        const long nr = r + kOffsets[k][0];
        const long nc = c + kOffsets[k][1];
        if (nr < 0 || nc < 0 || nr >= static_cast<long>(h) || nc >= static_cast<long>(w)) continue;
        const std::size_t q = static_cast<std::size_t>(nr) * w + static_cast<std::size_t>(nc);
        if (definition[q] || out.labels[q] != 0) continue;
        out.labels[q] = id;
        stack.push_back(q);
      }
    }
    if (touches_border) out.background_ids.insert(id);
  }
  return out;
}

// ---- filling ------------------------------------------------------------------

namespace detail {

// Shared by depth and texture filling. Pixels with label 0 are the original
// values and are never written. Run borders are always originally-defined
// pixels, so the result does not depend on traversal order.
template <typename T, typename Tag>
Raster<T, Tag> fill_labeled(Raster<T, Tag> values, const HoleLabeling& labeling, T background) {
  const auto& labels = labeling.labels;
  const std::size_t w = values.width();
  std::vector<std::uint8_t> background_flag(labeling.hole_count + 1, 0);
  for (auto id : labeling.background_ids) background_flag[id] = 1;

  for (std::size_t r = 0; r < values.height(); ++r) {
    std::size_t c = 0;
    while (c < w) {
      const std::uint32_t id = labels(r, c);
      if (id == 0) {
        ++c;
        continue;
      }
      std::size_t end = c;
      while (end < w && labels(r, end) == id) ++end;
      T fill = background;
      if (!background_flag[id]) {
        const bool has_left = c > 0 && labels(r, c - 1) == 0;
        const bool has_right = end < w && labels(r, end) == 0;
        // Under either connectivity a horizontal neighbor of a hole pixel is
        // defined or part of the same hole, and an interior hole never reaches
        // the raster edge, so both borders exist.
        assert(has_left && has_right);
        if (has_left && has_right) {
          fill = std::max(values(r, c - 1), values(r, end));
        } else if (has_left) {
          fill = values(r, c - 1);
        } else if (has_right) {
          fill = values(r, end);
        }
      }
      for (std::size_t k = c; k < end; ++k) values(r, k) = fill;
      c = end;
    }
  }
  return values;
}

inline void check_labeling(const HoleLabeling& labeling, const DefinitionMap& definition) {
  require_same_shape(labeling.labels, definition, "labeling vs definition");
  for (std::size_t i = 0; i < definition.size(); ++i) {
    if ((labeling.labels[i] == 0) != (definition[i] != 0)) {
      throw ValidationError("hole labeling disagrees with definition at pixel " +
                            std::to_string(i));
    }
  }
}

}  // namespace detail

/// Fills every undefined pixel: border-touching holes get the configured
/// background depth, interior holes are filled run by run with the larger of
/// the two defined pixels that bound the run horizontally.
inline DepthMap fill_depth(const DepthMap& depth, const HoleLabeling& labeling,
                           const FillConfig& config) {
  config.validate();
  require_same_shape(depth, labeling.labels, "depth vs labeling");
  detail::check_labeling(labeling, definition_map(depth));
  return detail::fill_labeled(depth, labeling, config.background_value_depth);
}

/// Texture counterpart of fill_depth: pixels undefined in `definition` are
/// zeroed, then refilled with the same rule on intensity values.
inline IntensityMap augment_texture(const IntensityMap& intensity, const DefinitionMap& definition,
                                    const HoleLabeling& labeling, const FillConfig& config) {
  config.validate();
  require_same_shape(intensity, definition, "intensity vs definition");
  detail::check_labeling(labeling, definition);
  IntensityMap masked = intensity;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    if (!definition[i]) masked[i] = 0.0f;
  }
  return detail::fill_labeled(std::move(masked), labeling, config.background_value_intensity);
}

}  // namespace depthprep::prep
