#pragma once

#include "forge/core/cloud.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace forge {

struct Neighbor {
  std::size_t index;
  double distance;
};

/// Static kd-tree over a fixed point set. Built once; const queries are safe to
/// run concurrently.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points, std::size_t leaf_size = 16);
  static KdTree from_cloud(const LabeledCloud& cloud);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Indices within distance r (inclusive), ascending by distance, ties by index.
  std::vector<std::size_t> radius_neighbors(const Vec3& query, double r) const;
  std::vector<Neighbor> radius_search(const Vec3& query, double r) const;

  /// Visits every index within distance r in unspecified order.
  template <typename F>
  void for_each_in_radius(const Vec3& query, double r, F&& visit) const;

  /// k nearest, ascending by distance, ties by index.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

 private:
  struct Node {
    Aabb box;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  static double box_dist2(const Aabb& box, const Vec3& q);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_ = 16;
};

template <typename F>
void KdTree::for_each_in_radius(const Vec3& query, double r, F&& visit) const {
  if (nodes_.empty()) return;
  const double r2 = r * r;
  std::int32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
    if (box_dist2(node.box, query) > r2) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        if ((points_[idx] - query).squaredNorm() <= r2) visit(static_cast<std::size_t>(idx));
      }
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
}

}  // namespace forge
