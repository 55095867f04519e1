#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

namespace depthprep::geom {

using Point3 = Eigen::Vector3d;

inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

struct Neighbor {
  double squared_distance;
  std::size_t index;
};

/// Exact nearest-neighbour index over a fixed point set. Immutable after
/// construction; concurrent queries are safe.
class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 8;
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  explicit KdTree(std::span<const Point3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) root_ = build(0, points_.size());
  }

  std::size_t size() const noexcept { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

  /// Closest stored point to `query`.
  Neighbor nearest(const Point3& query) const {
    Neighbor best{std::numeric_limits<double>::infinity(), kNone};
    if (root_ != kNone) nearest_rec(root_, query, best);
    return best;
  }

  /// The k closest stored points, ascending by distance. `exclude` drops one
  /// stored index from consideration (the query point itself).
  std::vector<Neighbor> knn(const Point3& query, std::size_t k, std::size_t exclude = kNone) const {
    std::vector<Neighbor> heap;
    heap.reserve(k + 1);
    if (k > 0 && root_ != kNone) knn_rec(root_, query, k, exclude, heap);
    std::sort_heap(heap.begin(), heap.end(), heap_less);
    return heap;
  }

 private:
  struct Node {
    std::size_t begin, end;
    std::size_t left = kNone, right = kNone;
    int axis = 0;
    double split = 0.0;
  };

  static bool heap_less(const Neighbor& a, const Neighbor& b) {
    return a.squared_distance < b.squared_distance;
  }

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Point3 lo = Point3::Constant(std::numeric_limits<double>::infinity());
    Point3 hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all coincident: keep as leaf

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void nearest_rec(std::size_t id, const Point3& q, Neighbor& best) const {
    const Node& n = nodes_[id];
    if (n.left == kNone) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const double d = squared_distance(q, points_[order_[i]]);
        if (d < best.squared_distance) best = {d, order_[i]};
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    nearest_rec(near, q, best);
    if (diff * diff <= best.squared_distance) nearest_rec(far, q, best);
  }

  void knn_rec(std::size_t id, const Point3& q, std::size_t k, std::size_t exclude,
               std::vector<Neighbor>& heap) const {
    const Node& n = nodes_[id];
    if (n.left == kNone) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = order_[i];
        if (idx == exclude) continue;
        const double d = squared_distance(q, points_[idx]);
        if (heap.size() < k) {
          heap.push_back({d, idx});
          std::push_heap(heap.begin(), heap.end(), heap_less);
        } else if (d < heap.front().squared_distance) {
          std::pop_heap(heap.begin(), heap.end(), heap_less);
          heap.back() = {d, idx};
          std::push_heap(heap.begin(), heap.end(), heap_less);
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    knn_rec(near, q, k, exclude, heap);
    if (heap.size() < k || diff * diff <= heap.front().squared_distance) {
      knn_rec(far, q, k, exclude, heap);
    }
  }

  std::vector<Point3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t root_ = kNone;
};

}  // namespace depthprep::geom
