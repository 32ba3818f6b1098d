#include "forge/core/cloud.hpp"

#include "forge/core/error.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

namespace forge {

void LabeledCloud::push_back(const Vec3f& p, int sem, int inst, Rgb rgb) {
  points.push_back(p);
  semantic.push_back(sem);
  instance.push_back(inst);
  if (color) color->push_back(rgb);
}

LabeledCloud LabeledCloud::unlabeled(std::vector<Vec3f> pts) {
  LabeledCloud c;
  c.semantic.assign(pts.size(), kUnlabeled);
  c.instance.assign(pts.size(), kUnlabeled);
  c.points = std::move(pts);
  return c;
}

LabeledCloud LabeledCloud::select(std::span<const std::size_t> indices) const {
  LabeledCloud out;
  out.points.reserve(indices.size());
  out.semantic.reserve(indices.size());
  out.instance.reserve(indices.size());
  if (color) out.color.emplace().reserve(indices.size());
  for (std::size_t i : indices) {
    out.points.push_back(points[i]);
    out.semantic.push_back(semantic[i]);
    out.instance.push_back(instance[i]);
    if (color) out.color->push_back((*color)[i]);
  }
  return out;
}

void validate(const LabeledCloud& cloud) {
  const std::size_t n = cloud.points.size();
  if (cloud.semantic.size() != n || cloud.instance.size() != n || (cloud.color && cloud.color->size() != n)) {
    fail(ErrorCode::InvalidGeometry, "per-point arrays differ in length");
  }
  std::unordered_map<int, int> instance_class;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3f& p = cloud.points[i];
    if (!std::isfinite(p.x()) || !std::isfinite(p.y()) || !std::isfinite(p.z())) {
      fail(ErrorCode::InvalidGeometry, "non-finite coordinate at point " + std::to_string(i));
    }
    const int inst = cloud.instance[i];
    if (inst < 0) continue;
    auto [it, inserted] = instance_class.emplace(inst, cloud.semantic[i]);
    if (!inserted && it->second != cloud.semantic[i]) {
      fail(ErrorCode::InvalidGeometry, "instance " + std::to_string(inst) + " spans several semantic classes");
    }
  }
}

Aabb bounds(std::span<const Vec3f> points) {
  Aabb box;
  for (const auto& p : points) box.extend(p.cast<double>());
  return box;
}

}  // namespace forge
