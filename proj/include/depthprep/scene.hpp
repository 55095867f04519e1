#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "depthprep/core.hpp"
#include "depthprep/geom.hpp"

namespace depthprep::scene {

using geom::Point3;

/// Plane n . x = offset with unit normal, oriented so the camera origin lies
/// on the negative side (offset > 0).
struct Plane {
  Point3 normal = Point3::UnitZ();
  double offset = 0.0;
  std::array<Point3, 3> vertices;

  /// Distance of `x` above the plane towards the camera; positive on the camera side.
  double height_of(const Point3& x) const { return offset - normal.dot(x); }
};

struct PlaneSearchConfig {
  std::size_t grid_w = 20;
  std::size_t grid_h = 20;
  /// Fraction of cells, ranked by squared deviation from the mean, that
  /// defines the near-mean group.
  double near_mean_fraction = 0.05;
  /// Fraction of cells, ranked by depth, that forms the far group.
  double far_fraction = 0.02;
  double object_margin_epsilon = 3.0;

  void validate() const {
    if (grid_w < 3 || grid_h < 3) throw ValidationError("plane-search grid must be at least 3x3");
    if (!(near_mean_fraction > 0.0 && near_mean_fraction < 1.0) ||
        !(far_fraction > 0.0 && far_fraction < 1.0)) {
      throw ValidationError("plane-search fractions must lie in (0, 1)");
    }
    if (!(object_margin_epsilon > 0.0)) throw ValidationError("object margin must be positive");
  }
};

struct GridCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

struct ReducedGrid {
  DepthMap grid;
  /// Source pixel of every grid cell, row-major.
  std::vector<GridCoord> source;
};

/// Samples the depth map on a coarse grid: every cell takes the defined
/// pixel nearest the center of its source rectangle.
inline ReducedGrid reduce_grid(const DepthMap& depth, std::size_t grid_w, std::size_t grid_h) {
  if (grid_w == 0 || grid_h == 0 || grid_w > depth.width() || grid_h > depth.height()) {
    throw ValidationError("grid " + std::to_string(grid_w) + "x" + std::to_string(grid_h) +
                          " is larger than the " + std::to_string(depth.width()) + "x" +
                          std::to_string(depth.height()) + " input");
  }
  ReducedGrid out{DepthMap(grid_w, grid_h, kUndefined), {}};
  out.source.resize(grid_w * grid_h);
  for (std::size_t i = 0; i < grid_h; ++i) {
    const std::size_t r0 = i * depth.height() / grid_h;
    const std::size_t r1 = (i + 1) * depth.height() / grid_h;
    for (std::size_t j = 0; j < grid_w; ++j) {
      const std::size_t c0 = j * depth.width() / grid_w;
      const std::size_t c1 = (j + 1) * depth.width() / grid_w;
      // doubled center coordinates keep the distance test in integers
      const long cr2 = static_cast<long>(r0 + r1 - 1);
      const long cc2 = static_cast<long>(c0 + c1 - 1);
      long best = -1;
      GridCoord pick{};
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) {
          if (!is_defined(depth(r, c))) continue;
          const long dr = 2 * static_cast<long>(r) - cr2;
          const long dc = 2 * static_cast<long>(c) - cc2;
          const long d2 = dr * dr + dc * dc;
          if (best < 0 || d2 < best) {
            best = d2;
            pick = {r, c};
          }
        }
      }
      if (best < 0) {
        throw ValidationError("grid cell " + std::to_string(i) + "," + std::to_string(j) +
                              " has no defined pixel");
      }
      out.grid(i, j) = depth(pick.row, pick.col);
      out.source[i * grid_w + j] = pick;
    }
  }
  return out;
}

inline DepthMap grid_reduce(const DepthMap& depth, const PlaneSearchConfig& config = {}) {
  config.validate();
  return reduce_grid(depth, config.grid_w, config.grid_h).grid;
}

struct PlaneVertices {
  GridCoord a, b, c;
};

namespace detail {

inline std::size_t rank_count(double fraction, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace detail

/// Picks the three ground cells spanning the plane triangle.
///
/// A and B are the leftmost and rightmost cells of the near-mean group (cells
/// whose squared deviation from the grid mean is within the lowest
/// near_mean_fraction). C is the middle cell, ordered by row, of the far
/// group (the highest far_fraction of depth values).
inline PlaneVertices select_plane_vertices(const DepthMap& grid, const PlaneSearchConfig& config = {}) {
  if (!(config.near_mean_fraction > 0.0 && config.near_mean_fraction < 1.0) ||
      !(config.far_fraction > 0.0 && config.far_fraction < 1.0)) {
    throw ValidationError("plane-search fractions must lie in (0, 1)");
  }
  const std::size_t n = grid.size();
  if (n < 3) throw ValidationError("plane search needs at least 3 grid cells");
  double sum = 0.0;
  for (auto v : grid.data()) {
    if (!is_defined(v)) throw ValidationError("plane search grid must be fully defined");
    sum += v;
  }
  // |n*d - sum| ranks cells exactly like (d - mean)^2 and stays exact in double,
  // so the grouping does not depend on a constant depth offset.
  const double nd = static_cast<double>(n);
  std::vector<double> deviation(n);
  for (std::size_t i = 0; i < n; ++i) deviation[i] = std::abs(nd * grid[i] - sum);

  std::vector<double> sorted = deviation;
  const std::size_t k1 = detail::rank_count(config.near_mean_fraction, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k1 - 1), sorted.end());
  const double near_threshold = sorted[k1 - 1];

  const std::size_t w = grid.width();
  bool found = false;
  GridCoord a{}, b{};
  for (std::size_t i = 0; i < n; ++i) {
    if (deviation[i] > near_threshold) continue;
    const GridCoord p{i / w, i % w};
    if (!found) {
      a = b = p;
      found = true;
      continue;
    }
    // row-major scan: strict comparisons keep the smaller row on ties
    if (p.col < a.col) a = p;
    if (p.col > b.col) b = p;
  }
  if (a.col == b.col) {
    throw DegenerateError("near-mean group spans fewer than 2 distinct columns");
  }

  std::vector<float> by_depth(grid.data().begin(), grid.data().end());
  const std::size_t k2 = detail::rank_count(config.far_fraction, n);
  std::nth_element(by_depth.begin(), by_depth.begin() + static_cast<std::ptrdiff_t>(k2 - 1),
                   by_depth.end(), std::greater<>());
  const float far_threshold = by_depth[k2 - 1];
  std::vector<GridCoord> far_group;
  for (std::size_t i = 0; i < n; ++i) {
    if (grid[i] >= far_threshold) far_group.push_back({i / w, i % w});  // already row-sorted
  }
  if (far_group.empty()) throw DegenerateError("far group is empty");
  const GridCoord c = far_group[far_group.size() / 2];
  if (c == a || c == b) throw DegenerateError("plane vertices are not pairwise distinct");
  return {a, b, c};
}

/// Plane through three points; rejects (near-)collinear input.
inline Plane fit_plane(const Point3& p1, const Point3& p2, const Point3& p3) {
  const Point3 u = p2 - p1;
  const Point3 v = p3 - p1;
  const Point3 cross = u.cross(v);
  const double scale = u.norm() * v.norm();
  if (p1 == p2 || p1 == p3 || p2 == p3 || !(cross.norm() >= 1e-9 * scale) || scale == 0.0) {
    throw DegenerateError("plane vertices are collinear or coincident");
  }
  Plane plane;
  plane.normal = cross.normalized();
  plane.offset = plane.normal.dot(p1);
  if (plane.offset == 0.0) throw DegenerateError("plane passes through the camera center");
  if (plane.offset < 0.0) {
    plane.normal = -plane.normal;
    plane.offset = -plane.offset;
  }
  plane.vertices = {p1, p2, p3};
  return plane;
}

inline Point3 unproject_pixel(std::size_t row, std::size_t col, double z, const CameraIntrinsics& k) {
  return {(static_cast<double>(col) - k.cx) * z / k.fx, (static_cast<double>(row) - k.cy) * z / k.fy, z};
}

/// Marks defined pixels lying strictly more than `epsilon` mm above the plane
/// on the camera side.
inline ObjectMap object_map(const DepthMap& depth, const DefinitionMap& definition, const Plane& plane,
                            const CameraIntrinsics& k, double epsilon) {
  require_same_shape(depth, definition, "depth vs definition");
  ObjectMap out(depth.width(), depth.height(), 0);
  for (std::size_t r = 0; r < depth.height(); ++r) {
    for (std::size_t c = 0; c < depth.width(); ++c) {
      if (!definition(r, c)) continue;
      const float z = depth(r, c);
      if (!is_defined(z)) continue;
      if (plane.height_of(unproject_pixel(r, c, z, k)) > epsilon) out(r, c) = 1;
    }
  }
  return out;
}

struct ObjectExtraction {
  Plane plane;
  PlaneVertices grid_vertices;
  std::array<GridCoord, 3> pixel_vertices;
  ObjectMap object;
};

/// Ground-plane search on the coarse grid followed by object masking. `depth`
/// must be fully defined (filled).
inline ObjectExtraction extract_object(const DepthMap& depth, const DefinitionMap& definition,
                                       const CameraIntrinsics& k, const PlaneSearchConfig& config = {}) {
  config.validate();
  const ReducedGrid reduced = reduce_grid(depth, config.grid_w, config.grid_h);
  const PlaneVertices v = select_plane_vertices(reduced.grid, config);
  auto lift = [&](const GridCoord& g) {
    const GridCoord px = reduced.source[g.row * config.grid_w + g.col];
    return std::pair{px, unproject_pixel(px.row, px.col, reduced.grid(g.row, g.col), k)};
  };
  const auto [pa, xa] = lift(v.a);
  const auto [pb, xb] = lift(v.b);
  const auto [pc, xc] = lift(v.c);
  ObjectExtraction out{fit_plane(xa, xb, xc), v, {pa, pb, pc}, {}};
  out.object = object_map(depth, definition, out.plane, k, config.object_margin_epsilon);
  return out;
}

}  // namespace depthprep::scene
