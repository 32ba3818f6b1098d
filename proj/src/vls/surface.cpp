#include "forge/core/error.hpp"
#include "forge/core/rng.hpp"
#include "forge/vls/scanner.hpp"

#include <algorithm>
#include <cmath>

namespace forge::vls {

LabeledCloud sample_surface(const treegen::Mesh& mesh, double density, std::uint64_t seed) {
  if (mesh.empty()) fail(ErrorCode::EmptyInput, "mesh has no faces");
  if (!(density > 0.0)) fail(ErrorCode::InvalidArgument, "surface density must be positive");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& v = mesh.faces[f].v;
    const Vec3 a = mesh.vertices[v[0]].cast<double>();
    const Vec3 b = mesh.vertices[v[1]].cast<double>();
    const Vec3 c = mesh.vertices[v[2]].cast<double>();
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative[f] = total;
  }
  const auto n = static_cast<std::size_t>(std::llround(total * density));
  Rng rng(derive_seed(seed, hash_name("surface-sample")));
  LabeledCloud cloud;
  cloud.points.reserve(n);
  cloud.semantic.reserve(n);
  cloud.instance.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pick = rng.uniform() * total;
    const auto f = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
                                            cumulative.begin());
    const auto& face = mesh.faces[std::min(f, mesh.faces.size() - 1)];
    const Vec3 a = mesh.vertices[face.v[0]].cast<double>();
    const Vec3 b = mesh.vertices[face.v[1]].cast<double>();
    const Vec3 c = mesh.vertices[face.v[2]].cast<double>();
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3 p = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
    cloud.push_back(p.cast<float>(), face.organ_id, face.instance_id);
  }
  return cloud;
}

}  // namespace forge::vls
