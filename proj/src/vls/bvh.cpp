#include "forge/vls/bvh.hpp"

#include "forge/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace forge::vls {

namespace {

constexpr std::uint32_t kLeafSize = 4;

bool better(double t, std::uint32_t tri, const std::optional<Hit>& best) {
  return !best || t < best->t || (t == best->t && tri < best->triangle);
}

// Entry distance of the ray into the box, or nullopt when it misses before t_max.
std::optional<double> slab(const Ray& ray, const Vec3& inv, const Aabb& box, double t_max) {
  double t0 = 0.0;
  double t1 = t_max;
  for (int k = 0; k < 3; ++k) {
    if (ray.dir[k] == 0.0) {
      if (ray.origin[k] < box.lo[k] || ray.origin[k] > box.hi[k]) return std::nullopt;
      continue;
    }
    double a = (box.lo[k] - ray.origin[k]) * inv[k];
    double b = (box.hi[k] - ray.origin[k]) * inv[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

}  // namespace

std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                         double t_max) {
  // Woop, Benthin and Wald's shear-and-scale formulation.
  int kz = 0;
  ray.dir.cwiseAbs().maxCoeff(&kz);
  int kx = (kz + 1) % 3;
  int ky = (kx + 1) % 3;
  if (ray.dir[kz] < 0.0) std::swap(kx, ky);
  const double sx = ray.dir[kx] / ray.dir[kz];
  const double sy = ray.dir[ky] / ray.dir[kz];
  const double sz = 1.0 / ray.dir[kz];

  const Vec3 pa = a - ray.origin;
  const Vec3 pb = b - ray.origin;
  const Vec3 pc = c - ray.origin;
  const double ax = pa[kx] - sx * pa[kz], ay = pa[ky] - sy * pa[kz];
  const double bx = pb[kx] - sx * pb[kz], by = pb[ky] - sy * pb[kz];
  const double cx = pc[kx] - sx * pc[kz], cy = pc[ky] - sy * pc[kz];

  const double u = cx * by - cy * bx;
  const double v = ax * cy - ay * cx;
  const double w = bx * ay - by * ax;
  if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return std::nullopt;
  const double det = u + v + w;
  if (det == 0.0) return std::nullopt;
  const double t = (u * sz * pa[kz] + v * sz * pb[kz] + w * sz * pc[kz]) / det;
  if (!(t > 0.0) || !(t < t_max)) return std::nullopt;
  return t;
}

TriangleBvh::TriangleBvh(std::span<const Vec3f> vertices, std::span<const std::array<std::uint32_t, 3>> triangles) {
  if (triangles.empty()) fail(ErrorCode::EmptyInput, "mesh has no triangles");
  tris_.reserve(triangles.size());
  for (const auto& t : triangles) {
    std::array<Vec3, 3> tri;
    for (int k = 0; k < 3; ++k) {
      if (t[k] >= vertices.size()) fail(ErrorCode::InvalidGeometry, "triangle references a missing vertex");
      tri[k] = vertices[t[k]].cast<double>();
    }
    tris_.push_back(tri);
  }
  order_.resize(tris_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * tris_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(tris_.size()), 0);
}

std::uint32_t TriangleBvh::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centers;
  for (std::uint32_t i = begin; i < end; ++i) {
    const auto& t = tris_[order_[i]];
    for (const auto& p : t) box.extend(p);
    centers.extend((t[0] + t[1] + t[2]) / 3.0);
  }
  // Pad so rounding in the slab test can never reject a grazing hit.
  const double pad = 1e-9 * std::max(1.0, std::max(box.lo.cwiseAbs().maxCoeff(), box.hi.cwiseAbs().maxCoeff()));
  box.lo.array() -= pad;
  box.hi.array() += pad;
  nodes_[id].box = box;

  const Vec3 spread = centers.extent();
  int axis = 0;
  spread.maxCoeff(&axis);
  if (end - begin <= kLeafSize || depth > 48 || spread[axis] <= 0.0) {
    nodes_[id].first = begin;
    nodes_[id].count = end - begin;
    return id;
  }
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = tris_[a][0][axis] + tris_[a][1][axis] + tris_[a][2][axis];
                     const double cb = tris_[b][0][axis] + tris_[b][1][axis] + tris_[b][2][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  build(begin, mid, depth + 1);
  nodes_[id].first = build(mid, end, depth + 1);
  return id;
}

std::optional<Hit> TriangleBvh::first_hit(const Ray& ray, double t_max) const {
  const Vec3 inv = ray.dir.cwiseInverse();
  std::optional<Hit> best;
  std::uint32_t stack[128];
  double entry[128];
  int top = 0;
  if (const auto t = slab(ray, inv, nodes_[0].box, t_max)) {
    stack[top] = 0;
    entry[top++] = *t;
  }
  while (top > 0) {
    --top;
    if (best && entry[top] > best->t) continue;
    const Node& node = nodes_[stack[top]];
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::uint32_t tri = order_[i];
        const auto& v = tris_[tri];
        const auto t = intersect_triangle(ray, v[0], v[1], v[2], t_max);
        if (t && better(*t, tri, best)) best = Hit{*t, tri};
      }
      continue;
    }
    const std::uint32_t l = stack[top] + 1;
    const std::uint32_t r = node.first;
    const double limit = best ? best->t : t_max;
    const auto tl = slab(ray, inv, nodes_[l].box, limit);
    const auto tr = slab(ray, inv, nodes_[r].box, limit);
    // push the farther child first so the nearer one is visited next
    if (tl && tr) {
      const bool left_first = *tl <= *tr;
      stack[top] = left_first ? r : l;
      entry[top++] = left_first ? *tr : *tl;
      stack[top] = left_first ? l : r;
      entry[top++] = left_first ? *tl : *tr;
    } else if (tl) {
      stack[top] = l;
      entry[top++] = *tl;
    } else if (tr) {
      stack[top] = r;
      entry[top++] = *tr;
    }
  }
  return best;
}

std::optional<Hit> TriangleBvh::first_hit_exhaustive(const Ray& ray, double t_max) const {
  std::optional<Hit> best;
  for (std::uint32_t i = 0; i < tris_.size(); ++i) {
    const auto& v = tris_[i];
    const auto t = intersect_triangle(ray, v[0], v[1], v[2], t_max);
    if (t && better(*t, i, best)) best = Hit{*t, i};
  }
  return best;
}

}  // namespace forge::vls
