#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "depthprep/core.hpp"

namespace depthprep::upsample {

/// Replicates each pixel into an s x s block; undefined stays undefined.
inline DepthMap upsample_nn(const DepthMap& depth, std::size_t s) {
  if (s == 0) throw ValidationError("up-sample factor must be positive");
  DepthMap out(depth.width() * s, depth.height() * s);
  for (std::size_t r = 0; r < out.height(); ++r) {
    for (std::size_t c = 0; c < out.width(); ++c) out(r, c) = depth(r / s, c / s);
  }
  return out;
}

namespace detail {

// Keys cubic convolution kernel with a = -0.5 (Catmull-Rom).
inline double cubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

inline std::array<double, 4> cubic_weights(double t) {
  return {cubic_weight(t + 1.0), cubic_weight(t), cubic_weight(1.0 - t), cubic_weight(2.0 - t)};
}

}  // namespace detail

/// Bicubic up-sampling with pixel-center alignment (source coordinate
/// (dst + 0.5) / s - 0.5) and clamp-to-edge sampling.
inline DepthMap upsample_bicubic(const DepthMap& depth, std::size_t s) {
  if (s == 0) throw ValidationError("up-sample factor must be positive");
  for (auto v : depth.data()) {
    if (!is_defined(v)) throw ValidationError("bicubic up-sampling needs a fully defined map");
  }
  const long w = static_cast<long>(depth.width());
  const long h = static_cast<long>(depth.height());
  DepthMap out(depth.width() * s, depth.height() * s);
  const double inv = 1.0 / static_cast<double>(s);

  auto sample = [&](long r, long c) {
    return static_cast<double>(depth(static_cast<std::size_t>(std::clamp(r, 0L, h - 1)),
                                     static_cast<std::size_t>(std::clamp(c, 0L, w - 1))));
  };

  for (std::size_t r = 0; r < out.height(); ++r) {
    const double sy = (static_cast<double>(r) + 0.5) * inv - 0.5;
    const long y0 = static_cast<long>(std::floor(sy));
    const auto wy = detail::cubic_weights(sy - static_cast<double>(y0));
    for (std::size_t c = 0; c < out.width(); ++c) {
      const double sx = (static_cast<double>(c) + 0.5) * inv - 0.5;
      const long x0 = static_cast<long>(std::floor(sx));
      const auto wx = detail::cubic_weights(sx - static_cast<double>(x0));
      double acc = 0.0;
      for (int i = 0; i < 4; ++i) {
        double row = 0.0;
        for (int j = 0; j < 4; ++j) row += wx[j] * sample(y0 - 1 + i, x0 - 1 + j);
        acc += wy[i] * row;
      }
      out(r, c) = static_cast<float>(acc);
    }
  }
  return out;
}

/// Restores the undefined state of pixels that were never measured.
inline DepthMap remask(const DepthMap& depth, const DefinitionMap& definition) {
  require_same_shape(depth, definition, "depth vs definition");
  DepthMap out = depth;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!definition[i]) out[i] = kUndefined;
  }
  return out;
}

}  // namespace depthprep::upsample
