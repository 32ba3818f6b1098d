#include "forge/core/kdtree.hpp"

#include "forge/core/error.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace forge {

KdTree::KdTree(std::vector<Vec3> points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::InvalidArgument, "too many points for KdTree");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

KdTree KdTree::from_cloud(const LabeledCloud& cloud) {
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud.points) pts.push_back(p.cast<double>());
  return KdTree(std::move(pts));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({});
  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
  nodes_[static_cast<std::size_t>(id)].box = box;
  nodes_[static_cast<std::size_t>(id)].begin = begin;
  nodes_[static_cast<std::size_t>(id)].end = end;
  if (end - begin <= leaf_size_) return id;

  int axis = 0;
  box.extent().maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = points_[a][axis];
                     const double vb = points_[b][axis];
                     return va < vb || (va == vb && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

double KdTree::box_dist2(const Aabb& box, const Vec3& q) {
  const Vec3 d = (box.lo - q).cwiseMax(q - box.hi).cwiseMax(0.0);
  return d.squaredNorm();
}

std::vector<Neighbor> KdTree::radius_search(const Vec3& query, double r) const {
  std::vector<Neighbor> out;
  if (!(r >= 0.0)) return out;
  for_each_in_radius(query, r, [&](std::size_t idx) { out.push_back({idx, (points_[idx] - query).norm()}); });
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  });
  return out;
}

std::vector<std::size_t> KdTree::radius_neighbors(const Vec3& query, double r) const {
  if (!(r > 0.0)) fail(ErrorCode::InvalidArgument, "radius must be positive");
  const auto found = radius_search(query, r);
  std::vector<std::size_t> idx;
  idx.reserve(found.size());
  for (const auto& n : found) idx.push_back(n.index);
  return idx;
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  k = std::min(k, points_.size());
  if (k == 0) return {};
  const auto worse = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  };
  // max-heap on (distance, index): top is the current worst kept neighbor
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> heap(worse);
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (heap.size() == k) {
      const double bound = heap.top().distance;
      if (box_dist2(node.box, query) > bound * bound) continue;
    }
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Neighbor cand{order_[i], (points_[order_[i]] - query).norm()};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (worse(cand, heap.top())) {
          heap.pop();
          heap.push(cand);
        }
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  std::vector<Neighbor> out;
  out.reserve(k);
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace forge
