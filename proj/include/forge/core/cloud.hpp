#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace forge {

using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Rgb = std::array<std::uint8_t, 3>;

inline constexpr int kUnlabeled = -1;

/// Points with per-point semantic class and instance id (-1 = unlabeled).
struct LabeledCloud {
  std::vector<Vec3f> points;
  std::vector<int> semantic;
  std::vector<int> instance;
  std::optional<std::vector<Rgb>> color;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Appends one point; color is only stored when the cloud carries colors.
  void push_back(const Vec3f& p, int sem, int inst, Rgb rgb = {0, 0, 0});

  /// Cloud with `n` points, all unlabeled.
  static LabeledCloud unlabeled(std::vector<Vec3f> points);

  /// Subset in the given index order.
  LabeledCloud select(std::span<const std::size_t> indices) const;

  bool operator==(const LabeledCloud&) const = default;
};

/// Throws InvalidGeometry on array-length mismatch, non-finite coordinates, or
/// an instance id that spans several semantic classes.
void validate(const LabeledCloud& cloud);

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool valid() const { return lo.x() <= hi.x(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return valid() ? extent().norm() : 0.0; }
};

Aabb bounds(std::span<const Vec3f> points);

}  // namespace forge
