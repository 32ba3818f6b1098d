#pragma once

#include "forge/core/cloud.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace forge::vls {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitX();  // need not be normalized; t is in units of |dir|
};

struct Hit {
  double t = 0.0;
  std::uint32_t triangle = 0;
};

/// Watertight ray/triangle test that reports hits on both faces. Returns the
/// ray parameter of the hit when it lies in (0, t_max).
std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                         double t_max);

/// Bounding-volume hierarchy over a triangle soup. First-hit ties on t go to
/// the lower triangle index.
class TriangleBvh {
 public:
  TriangleBvh(std::span<const Vec3f> vertices, std::span<const std::array<std::uint32_t, 3>> triangles);

  std::optional<Hit> first_hit(const Ray& ray, double t_max) const;
  /// Reference: tests every triangle.
  std::optional<Hit> first_hit_exhaustive(const Ray& ray, double t_max) const;

  std::size_t triangle_count() const { return tris_.size(); }
  const Aabb& bounds() const { return nodes_.front().box; }
  const std::array<Vec3, 3>& triangle(std::size_t i) const { return tris_[i]; }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // right child (left is the next node), or first primitive of a leaf
    std::uint32_t count = 0;  // primitives in a leaf, 0 for inner nodes
  };

  // Returns the node index; a left child always directly follows its parent.
  std::uint32_t build(std::uint32_t begin, std::uint32_t end, int depth);

  std::vector<std::array<Vec3, 3>> tris_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace forge::vls
