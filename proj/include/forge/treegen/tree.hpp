#pragma once

#include "forge/core/cloud.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace forge::treegen {

/// One branch measured on a base tree. Insertion is a height fraction of the
/// trunk for order 1 and a length fraction of the parent branch above that.
struct BranchRecord {
  double insertion = 0.0;
  double azimuth = 0.0;    // rad, from +X towards +Y
  double elevation = 0.0;  // rad, above the horizontal plane
  double length = 0.0;     // m
  double base_radius = 0.0;  // m
  int order = 1;

  bool operator==(const BranchRecord&) const = default;
};

struct TreeStats {
  double trunk_height = 0.0;
  double trunk_base_radius = 0.0;
  std::vector<Vec3> trunk_skeleton;  // base first
  std::vector<BranchRecord> branch_records;
  std::vector<int> branch_count_per_order;  // index 0 = order 1
  /// Branch instances skipped during extraction for having too few points.
  int skipped_branches = 0;

  /// Sorts records by (order, insertion, azimuth, ...) and recomputes the
  /// per-order counts.
  void canonicalize();
  /// Throws InvalidStats when an invariant is broken.
  void validate() const;
  int max_order() const { return static_cast<int>(branch_count_per_order.size()); }

  bool operator==(const TreeStats&) const = default;

  nlohmann::ordered_json to_json() const;
  static TreeStats from_json(const nlohmann::json& j);
};

/// Tapered skeleton segment. Capsule radius is the larger end radius.
struct Segment {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  double start_radius = 0.0;
  double end_radius = 0.0;
  int organ_id = 0;
  int instance_id = 0;
  int order = 0;  // 0 = trunk
  int parent = -1;  // parent segment index, -1 for the root

  double capsule_radius() const { return std::max(start_radius, end_radius); }
  bool operator==(const Segment&) const = default;
};

struct Face {
  std::array<std::uint32_t, 3> v{};
  int organ_id = 0;
  int instance_id = 0;

  bool operator==(const Face&) const = default;
};

struct Mesh {
  std::vector<Vec3f> vertices;
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }
  bool operator==(const Mesh&) const = default;
};

struct TreeModel {
  std::vector<Segment> skeleton;
  Mesh mesh;

  /// Parent instance of every instance (-1 for the trunk), from the skeleton.
  std::vector<int> instance_parents() const;
  int instance_count() const;

  bool operator==(const TreeModel&) const = default;
};

/// Closest distance between segments [p0,p1] and [q0,q1].
double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);

/// Two capsules collide when their axis distance is below the radius sum
/// minus `tolerance`.
bool capsules_collide(const Segment& a, const Segment& b, double tolerance);

struct CollisionPair {
  std::size_t a;
  std::size_t b;
};

/// Exhaustive test of every segment pair from different instances that are
/// not in a parent/child relation.
std::vector<CollisionPair> find_collisions(const TreeModel& model, double tolerance);

/// True when every segment's radius is non-increasing along the segment and
/// never exceeds the parent segment's end radius.
bool is_tapered(const TreeModel& model);

/// True when the skeleton is a tree with exactly one root.
bool is_acyclic_single_root(const TreeModel& model);

// Serialization: organ-labeled binary PLY mesh and skeleton JSON.
void write_mesh_ply(const Mesh& mesh, const std::filesystem::path& path);
Mesh read_mesh_ply(const std::filesystem::path& path);
nlohmann::ordered_json skeleton_to_json(const std::vector<Segment>& skeleton);
std::vector<Segment> skeleton_from_json(const nlohmann::json& j);

void save_model(const TreeModel& model, const std::filesystem::path& ply_path);
/// Loads the PLY and, if present, the sibling "<stem>.skeleton.json".
TreeModel load_model(const std::filesystem::path& ply_path);
std::filesystem::path skeleton_path_for(const std::filesystem::path& ply_path);

}  // namespace forge::treegen
