#pragma once

#include "forge/core/cloud.hpp"
#include "forge/core/parallel.hpp"
#include "forge/core/voxel.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

namespace forge::deform {

struct Material {
  double young = 0.0;    // Pa
  double poisson = 0.0;  // in (0, 0.5)
  bool operator==(const Material&) const = default;
};

/// Semantic class -> material.
using MaterialMap = std::map<int, Material>;

/// Throws InvalidArgument when E <= 0 or nu is outside (0, 0.5).
void validate(const MaterialMap& materials);
/// Trunk 1 MPa, branch 0.5 MPa, any further (leaf-like) class 0.1 MPa.
MaterialMap default_materials(int n_classes);
MaterialMap materials_from_json(const nlohmann::json& j);
nlohmann::ordered_json materials_to_json(const MaterialMap& materials);

/// Hexahedral elements over the occupied voxels. Element corners follow the
/// usual order: (0,0,0) (1,0,0) (1,1,0) (0,1,0), then the same at z + 1.
struct Lattice {
  VoxelIndexer indexer;
  std::vector<VoxelKey> elements;  // voxel key per element, sorted
  std::vector<std::array<std::uint32_t, 8>> element_vertices;
  std::vector<int> element_class;
  std::vector<Material> element_material;
  std::vector<VoxelKey> vertices;  // lattice corner coordinates, sorted
  std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> element_index;

  double voxel_size() const { return indexer.voxel_size; }
  std::size_t element_count() const { return elements.size(); }
  std::size_t vertex_count() const { return vertices.size(); }
  Vec3 vertex_position(std::uint32_t v) const;
};

/// One element per occupied voxel; material from the majority semantic class
/// (ties to the lower class id). Throws MissingMaterial for a class without
/// an entry and InvalidInput for unlabeled points.
Lattice build_lattice(const LabeledCloud& cloud, double voxel_size, const MaterialMap& materials);

/// 24x24 stiffness of a unit cube with E = 1 and the given Poisson ratio,
/// integrated with `gauss_points` per axis. An element of side h and modulus
/// E has stiffness E * h * reference.
using ElementMatrix = Eigen::Matrix<double, 24, 24>;
ElementMatrix reference_stiffness(double poisson, int gauss_points = 2);

struct PointForce {
  std::uint32_t vertex = 0;
  Vec3 force = Vec3::Zero();  // N
};

struct ForceSpec {
  std::vector<PointForce> forces;
  double bound = 5.0;  // N, per component
  /// Throws InvalidArgument for a component outside [-bound, bound] or a
  /// vertex that does not exist.
  void validate(const Lattice& lattice) const;
};

/// Vertex mask, 1 = fixed.
using FixedMask = std::vector<std::uint8_t>;

/// Every vertex of the elements in the lowest occupied z layer.
FixedMask lowest_layer_fixed(const Lattice& lattice);

struct SolverOptions {
  double tolerance = 1e-8;   // relative residual
  double max_iter_factor = 10.0;  // iteration cap = factor * DOF
};

struct DeformField {
  std::vector<Vec3> displacement;  // per lattice vertex, m
  int iterations = 0;
  double relative_residual = 0.0;
  /// Face-connected components held in place for lacking enough anchoring.
  std::size_t frozen_components = 0;
  std::size_t frozen_vertices = 0;
};

/// Solves K u = f with fixed vertices at zero using Jacobi-preconditioned CG.
/// Components that share no face with an anchored part and hold fewer than
/// three non-collinear fixed vertices are frozen. Throws UnconstrainedSystem
/// when nothing is fixed and SolverFailure when CG stalls.
DeformField solve_elastic(const Lattice& lattice, const ForceSpec& forces, const FixedMask& fixed,
                          const SolverOptions& options = {}, Exec exec = Exec::parallel);

/// Matrix-free y = K x over the whole lattice, ignoring constraints.
std::vector<double> apply_stiffness(const Lattice& lattice, const std::vector<double>& x, Exec exec = Exec::parallel);

/// Dense global stiffness, for tests on small lattices.
Eigen::MatrixXd assemble_dense(const Lattice& lattice, int gauss_points = 2);

/// Trilinear interpolation of the element corner displacements at every
/// point. Throws LatticeCoverageError for points outside occupied voxels.
LabeledCloud apply_deformation(const LabeledCloud& cloud, const Lattice& lattice, const DeformField& field);

struct AugmentOptions {
  std::size_t forces_per_variant = 4;
  SolverOptions solver;
};

/// n_variants deformed copies, each with random forces on random free
/// vertices, components uniform in [-force_bound, force_bound].
std::vector<LabeledCloud> augment(const LabeledCloud& cloud, std::size_t n_variants, double voxel_size,
                                  const MaterialMap& materials, double force_bound, std::uint64_t seed,
                                  const AugmentOptions& options = {}, Exec exec = Exec::parallel);

}  // namespace forge::deform
