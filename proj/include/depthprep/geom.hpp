#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "depthprep/core.hpp"
#include "depthprep/kdtree.hpp"

namespace depthprep::geom {

using Rgb = std::array<float, 3>;

struct PixelIndex {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Camera-space points in millimeters with optional per-point color and
/// provenance. Optional arrays, when present, match `points` in length.
struct PointCloud {
  std::vector<Point3> points;
  std::optional<std::vector<Rgb>> colors;
  std::optional<std::vector<PixelIndex>> source_index;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  void validate() const {
    if (colors && colors->size() != points.size()) {
      throw ValidationError("point colors do not match point count");
    }
    if (source_index && source_index->size() != points.size()) {
      throw ValidationError("point provenance does not match point count");
    }
    for (const auto& p : points) {
      if (!p.allFinite()) throw ValidationError("point cloud holds a non-finite coordinate");
    }
  }
};

/// Pinhole back-projection of every defined pixel.
inline PointCloud unproject(const DepthMap& depth, const DefinitionMap& definition,
                            const CameraIntrinsics& k) {
  require_same_shape(depth, definition, "depth vs definition");
  PointCloud cloud;
  cloud.source_index.emplace();
  const std::size_t n = count_ones(definition);
  cloud.points.reserve(n);
  cloud.source_index->reserve(n);
  for (std::size_t r = 0; r < depth.height(); ++r) {
    for (std::size_t c = 0; c < depth.width(); ++c) {
      if (!definition(r, c)) continue;
      const double z = depth(r, c);
      if (!std::isfinite(z)) throw ValidationError("defined pixel without depth value");
      cloud.points.emplace_back((static_cast<double>(c) - k.cx) * z / k.fx,
                                (static_cast<double>(r) - k.cy) * z / k.fy, z);
      cloud.source_index->push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
    }
  }
  return cloud;
}

/// Keeps the points selected by `keep`, preserving order and optional arrays.
inline PointCloud select(const PointCloud& cloud, const std::vector<std::uint8_t>& keep) {
  PointCloud out;
  if (cloud.colors) out.colors.emplace();
  if (cloud.source_index) out.source_index.emplace();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!keep[i]) continue;
    out.points.push_back(cloud.points[i]);
    if (cloud.colors) out.colors->push_back((*cloud.colors)[i]);
    if (cloud.source_index) out.source_index->push_back((*cloud.source_index)[i]);
  }
  return out;
}

// ---- statistical outlier removal ---------------------------------------------

struct OutlierParams {
  std::size_t k_neighbors = 20;
  double std_ratio = 2.0;

  void validate() const {
    if (k_neighbors < 1) throw ValidationError("k_neighbors must be >= 1");
    if (!(std_ratio > 0.0)) throw ValidationError("std_ratio must be positive");
  }
};

struct OutlierResult {
  PointCloud cloud;
  std::size_t removed_count = 0;
  /// Mean distance of every input point to its k nearest neighbours.
  std::vector<double> mean_distances;
  double threshold = 0.0;
};

/// Drops points whose mean k-NN distance exceeds mu + std_ratio * sigma over
/// the whole cloud. sigma is the sample standard deviation (n - 1).
inline OutlierResult remove_outliers(const PointCloud& cloud, const OutlierParams& params = {}) {
  params.validate();
  if (cloud.size() <= params.k_neighbors) {
    throw ValidationError("outlier removal needs more than " + std::to_string(params.k_neighbors) +
                          " points, got " + std::to_string(cloud.size()));
  }
  const KdTree tree(cloud.points);
  OutlierResult result;
  result.mean_distances.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], params.k_neighbors, i);
    double sum = 0.0;
    for (const auto& n : nn) sum += std::sqrt(n.squared_distance);
    result.mean_distances[i] = sum / static_cast<double>(nn.size());
  }
  const double n = static_cast<double>(cloud.size());
  double mu = 0.0;
  for (double d : result.mean_distances) mu += d;
  mu /= n;
  double ss = 0.0;
  for (double d : result.mean_distances) ss += (d - mu) * (d - mu);
  const double sigma = std::sqrt(ss / (n - 1.0));
  result.threshold = mu + params.std_ratio * sigma;

  std::vector<std::uint8_t> keep(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    keep[i] = result.mean_distances[i] <= result.threshold;
    result.removed_count += !keep[i];
  }
  result.cloud = select(cloud, keep);
  return result;
}

// ---- distances ----------------------------------------------------------------

struct DistanceStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::vector<double> per_point;
};

inline DistanceStats summarize(std::vector<double> per_point) {
  DistanceStats s;
  if (per_point.empty()) return s;
  s.min = *std::min_element(per_point.begin(), per_point.end());
  s.max = *std::max_element(per_point.begin(), per_point.end());
  double sum = 0.0;
  for (double d : per_point) sum += d;
  s.mean = sum / static_cast<double>(per_point.size());
  s.per_point = std::move(per_point);
  return s;
}

/// One-sided nearest-neighbour distances from each candidate point to the
/// reference cloud.
inline DistanceStats nn_distances(const PointCloud& candidate, const PointCloud& reference) {
  if (candidate.empty() || reference.empty()) {
    throw ValidationError("distance statistics need two non-empty clouds");
  }
  const KdTree tree(reference.points);
  std::vector<double> d(candidate.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    d[i] = std::sqrt(tree.nearest(candidate.points[i]).squared_distance);
  }
  return summarize(std::move(d));
}

/// Symmetric variant: per-point distances of both directions, candidate
/// points first.
inline DistanceStats nn_distances_symmetric(const PointCloud& candidate,
                                            const PointCloud& reference) {
  DistanceStats ab = nn_distances(candidate, reference);
  DistanceStats ba = nn_distances(reference, candidate);
  std::vector<double> all = std::move(ab.per_point);
  all.insert(all.end(), ba.per_point.begin(), ba.per_point.end());
  return summarize(std::move(all));
}

// ---- coloring ------------------------------------------------------------------

inline constexpr double kDefaultColorThreshold = 2.0;

/// Blue at 0, green at threshold / 2, red at and beyond the threshold.
inline Rgb distance_color(double distance, double threshold = kDefaultColorThreshold) {
  if (distance >= threshold) return {1.0f, 0.0f, 0.0f};
  const double half = threshold / 2.0;
  const double d = std::max(distance, 0.0);
  if (d <= half) {
    const double t = d / half;
    return {0.0f, static_cast<float>(t), static_cast<float>(1.0 - t)};
  }
  const double t = (d - half) / half;
  return {static_cast<float>(t), static_cast<float>(1.0 - t), 0.0f};
}

inline std::vector<Rgb> color_by_distance(const DistanceStats& stats,
                                          double threshold = kDefaultColorThreshold) {
  std::vector<Rgb> colors;
  colors.reserve(stats.per_point.size());
  for (double d : stats.per_point) colors.push_back(distance_color(d, threshold));
  return colors;
}

}  // namespace depthprep::geom
