#include "forge/core/error.hpp"
#include "forge/deform/deform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace forge::deform {

namespace {

constexpr std::array<std::array<int, 3>, 8> kCorner{{{0, 0, 0},
                                                     {1, 0, 0},
                                                     {1, 1, 0},
                                                     {0, 1, 0},
                                                     {0, 0, 1},
                                                     {1, 0, 1},
                                                     {1, 1, 1},
                                                     {0, 1, 1}}};

}  // namespace

void validate(const MaterialMap& materials) {
  for (const auto& [cls, m] : materials) {
    if (!(m.young > 0.0)) fail(ErrorCode::InvalidArgument, "class " + std::to_string(cls) + ": E must be positive");
    if (!(m.poisson > 0.0 && m.poisson < 0.5)) {
      fail(ErrorCode::InvalidArgument, "class " + std::to_string(cls) + ": nu must lie in (0, 0.5)");
    }
  }
}

MaterialMap default_materials(int n_classes) {
  MaterialMap m;
  for (int c = 0; c < n_classes; ++c) {
    if (c == 0) {
      m[c] = {1e6, 0.3};
    } else if (c == 1) {
      m[c] = {5e5, 0.3};
    } else {
      m[c] = {1e5, 0.35};
    }
  }
  return m;
}

MaterialMap materials_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::SchemaError, "materials must be an object of class id -> {E, nu}");
  MaterialMap m;
  for (const auto& [key, value] : j.items()) {
    int cls = 0;
    try {
      std::size_t used = 0;
      cls = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      fail(ErrorCode::SchemaError, "material key is not a class id: " + key);
    }
    if (!value.is_object() || !value.contains("E") || !value.contains("nu")) {
      fail(ErrorCode::SchemaError, "material " + key + " needs E and nu");
    }
    m[cls] = {value.at("E").get<double>(), value.at("nu").get<double>()};
  }
  validate(m);
  return m;
}

nlohmann::ordered_json materials_to_json(const MaterialMap& materials) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [cls, m] : materials) j[std::to_string(cls)] = {{"E", m.young}, {"nu", m.poisson}};
  return j;
}

Vec3 Lattice::vertex_position(std::uint32_t v) const {
  const auto& k = vertices[v];
  return indexer.origin + indexer.voxel_size * Vec3(k.x, k.y, k.z);
}

Lattice build_lattice(const LabeledCloud& cloud, double voxel_size, const MaterialMap& materials) {
  validate(materials);
  for (int s : cloud.semantic) {
    if (s < 0) fail(ErrorCode::InvalidInput, "deformation needs a semantic label on every point");
  }
  const VoxelGrid grid = voxelize(cloud, voxel_size);

  Lattice lat;
  lat.indexer = VoxelIndexer(bounds(cloud.points), voxel_size);
  const std::size_t n = grid.occupied.size();
  lat.elements.reserve(n);
  lat.element_class.reserve(n);
  lat.element_material.reserve(n);
  std::vector<VoxelKey> corners;
  corners.reserve(8 * n);
  for (const auto& cell : grid.occupied) {
    std::map<int, std::size_t> votes;
    for (auto i : cell.points) ++votes[cloud.semantic[i]];
    int cls = votes.begin()->first;
    std::size_t best = 0;
    for (const auto& [c, count] : votes) {
      if (count > best) {
        best = count;
        cls = c;
      }
    }
    const auto it = materials.find(cls);
    if (it == materials.end()) fail(ErrorCode::MissingMaterial, "no material for class " + std::to_string(cls));
    lat.element_index.emplace(cell.key, static_cast<std::uint32_t>(lat.elements.size()));
    lat.elements.push_back(cell.key);
    lat.element_class.push_back(cls);
    lat.element_material.push_back(it->second);
    for (const auto& c : kCorner) corners.push_back({cell.key.x + c[0], cell.key.y + c[1], cell.key.z + c[2]});
  }
  std::sort(corners.begin(), corners.end());
  corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
  lat.vertices = std::move(corners);

  lat.element_vertices.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    const auto& k = lat.elements[e];
    for (int a = 0; a < 8; ++a) {
      const VoxelKey v{k.x + kCorner[a][0], k.y + kCorner[a][1], k.z + kCorner[a][2]};
      const auto it = std::lower_bound(lat.vertices.begin(), lat.vertices.end(), v);
      lat.element_vertices[e][a] = static_cast<std::uint32_t>(it - lat.vertices.begin());
    }
  }
  return lat;
}

FixedMask lowest_layer_fixed(const Lattice& lattice) {
  FixedMask fixed(lattice.vertex_count(), 0);
  if (lattice.elements.empty()) return fixed;
  int lowest = lattice.elements.front().z;
  for (const auto& k : lattice.elements) lowest = std::min(lowest, k.z);
  for (std::size_t e = 0; e < lattice.element_count(); ++e) {
    if (lattice.elements[e].z != lowest) continue;
    for (auto v : lattice.element_vertices[e]) fixed[v] = 1;
  }
  return fixed;
}

LabeledCloud apply_deformation(const LabeledCloud& cloud, const Lattice& lattice, const DeformField& field) {
  if (field.displacement.size() != lattice.vertex_count()) {
    fail(ErrorCode::InvalidArgument, "displacement field does not match the lattice");
  }
  LabeledCloud out = cloud;
  const double h = lattice.voxel_size();
  std::vector<std::uint8_t> uncovered(cloud.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(cloud.size()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const Vec3 p = cloud.points[i].cast<double>();
    const auto key = lattice.indexer.key_of(p);
    const auto it = key ? lattice.element_index.find(*key) : lattice.element_index.end();
    if (it == lattice.element_index.end()) {
      uncovered[i] = 1;
      continue;
    }
    const Vec3 xi = ((p - lattice.indexer.cell_min(*key)) / h).cwiseMax(0.0).cwiseMin(1.0);
    Vec3 u = Vec3::Zero();
    const auto& verts = lattice.element_vertices[it->second];
    for (int a = 0; a < 8; ++a) {
      const double w = (kCorner[a][0] ? xi.x() : 1.0 - xi.x()) * (kCorner[a][1] ? xi.y() : 1.0 - xi.y()) *
                       (kCorner[a][2] ? xi.z() : 1.0 - xi.z());
      u += w * field.displacement[verts[a]];
    }
    out.points[i] = (p + u).cast<float>();
  }
  const auto bad = std::find(uncovered.begin(), uncovered.end(), 1);
  if (bad != uncovered.end()) {
    fail(ErrorCode::LatticeCoverageError,
         "point " + std::to_string(bad - uncovered.begin()) + " lies outside the occupied lattice");
  }
  return out;
}

}  // namespace forge::deform
