#include "forge/core/voxel.hpp"

#include "forge/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace forge {

VoxelIndexer::VoxelIndexer(const Aabb& box, double size) : origin(box.lo), voxel_size(size) {
  const Vec3 ext = box.extent();
  const auto last_index = [&](double e) {
    const double cells = std::ceil(e / voxel_size);
    return std::max(0, static_cast<int>(cells) - 1);
  };
  last = {last_index(ext.x()), last_index(ext.y()), last_index(ext.z())};
}

std::optional<VoxelKey> VoxelIndexer::key_of(const Vec3& p) const {
  const Vec3 d = (p - origin) / voxel_size;
  const auto axis = [](double v, int hi) -> std::optional<int> {
    const double f = std::floor(v);
    if (f < 0.0) return std::nullopt;
    if (f > hi) {
      // exactly on the upper face (or within rounding of it) goes to the last cell
      if (v <= hi + 1.0 + 1e-9) return hi;
      return std::nullopt;
    }
    return static_cast<int>(f);
  };
  auto x = axis(d.x(), last.x);
  auto y = axis(d.y(), last.y);
  auto z = axis(d.z(), last.z);
  if (!x || !y || !z) return std::nullopt;
  return VoxelKey{*x, *y, *z};
}

Vec3 VoxelIndexer::cell_min(const VoxelKey& k) const {
  return origin + voxel_size * Vec3(k.x, k.y, k.z);
}

const VoxelCell* VoxelGrid::find(const VoxelKey& key) const {
  auto it = std::lower_bound(occupied.begin(), occupied.end(), key,
                             [](const VoxelCell& c, const VoxelKey& k) { return c.key < k; });
  if (it == occupied.end() || it->key != key) return nullptr;
  return &*it;
}

std::size_t VoxelGrid::point_count() const {
  std::size_t n = 0;
  for (const auto& c : occupied) n += c.points.size();
  return n;
}

VoxelGrid voxelize(const LabeledCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) fail(ErrorCode::InvalidArgument, "voxel_size must be positive");
  if (cloud.empty()) fail(ErrorCode::EmptyInput, "cannot voxelize an empty cloud");
  for (const auto& p : cloud.points) {
    if (!p.allFinite()) fail(ErrorCode::InvalidGeometry, "non-finite coordinate");
  }
  const VoxelIndexer indexer(bounds(cloud.points), voxel_size);

  std::unordered_map<VoxelKey, std::vector<std::size_t>, VoxelKeyHash> cells;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto key = indexer.key_of(cloud.points[i].cast<double>());
    cells[key.value()].push_back(i);
  }

  VoxelGrid grid;
  grid.origin = indexer.origin;
  grid.voxel_size = voxel_size;
  grid.occupied.reserve(cells.size());
  for (auto& [key, pts] : cells) grid.occupied.push_back({key, std::move(pts)});
  std::sort(grid.occupied.begin(), grid.occupied.end(),
            [](const VoxelCell& a, const VoxelCell& b) { return a.key < b.key; });
  return grid;
}

}  // namespace forge
