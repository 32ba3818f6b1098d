#pragma once

#include "forge/core/cloud.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace forge {

struct VoxelKey {
  int x = 0;
  int y = 0;
  int z = 0;

  auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    return static_cast<std::size_t>(static_cast<std::uint64_t>(k.x) * 73856093ull ^
                                    static_cast<std::uint64_t>(k.y) * 19349663ull ^
                                    static_cast<std::uint64_t>(k.z) * 83492791ull);
  }
};

/// Maps coordinates to cells as floor((p - origin) / size), clamping points on
/// the upper face of the bounding box into the last cell.
struct VoxelIndexer {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 1.0;
  VoxelKey last;  // largest valid index per axis

  VoxelIndexer() = default;
  VoxelIndexer(const Aabb& box, double voxel_size);

  /// Cell of p, or nullopt when p lies outside the indexed box.
  std::optional<VoxelKey> key_of(const Vec3& p) const;
  Vec3 cell_min(const VoxelKey& k) const;
};

struct VoxelCell {
  VoxelKey key;
  std::vector<std::size_t> points;
};

/// Partition of a cloud into cubic cells. Cells are sorted by key.
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 1.0;
  std::vector<VoxelCell> occupied;

  const VoxelCell* find(const VoxelKey& key) const;
  std::size_t point_count() const;
};

VoxelGrid voxelize(const LabeledCloud& cloud, double voxel_size);

}  // namespace forge
