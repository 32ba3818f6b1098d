#include "forge/vls/scanner.hpp"

#include "forge/core/error.hpp"
#include "forge/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace forge::vls {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::size_t steps(double span, double resolution) {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(span / resolution)));
}

double unit_open(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

// Standard normal drawn from a counter-based stream keyed by (seed, position, ray).
double ray_normal(std::uint64_t seed, std::size_t position, std::size_t ray) {
  const std::uint64_t k = derive_seed(seed, hash_name("vls-noise"), position, ray);
  const double u1 = unit_open(splitmix64(k));
  const double u2 = unit_open(splitmix64(k ^ 0xA5A5A5A5A5A5A5A5ull));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct Sample {
  Vec3f point;
  int organ;
  int instance;
  std::uint32_t triangle;
  double range;
};

}  // namespace

void ScannerConfig::validate() const {
  if (!(angular_resolution_deg > 0.0)) fail(ErrorCode::InvalidArgument, "angular resolution must be positive");
  if (!(max_range > 0.0)) fail(ErrorCode::InvalidArgument, "max range must be positive");
  if (!(range_noise_sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "noise sigma must be non-negative");
  if (!(azimuth_max_deg > azimuth_min_deg) || !(elevation_max_deg > elevation_min_deg)) {
    fail(ErrorCode::InvalidArgument, "empty angular window");
  }
  if (positions.empty()) fail(ErrorCode::InvalidArgument, "no scanner positions");
}

RayGrid ray_grid(const ScannerConfig& config) {
  return {steps(config.azimuth_max_deg - config.azimuth_min_deg, config.angular_resolution_deg),
          steps(config.elevation_max_deg - config.elevation_min_deg, config.angular_resolution_deg)};
}

Vec3 ray_direction(const ScannerConfig& config, std::size_t azimuth_index, std::size_t elevation_index) {
  const double az = (config.azimuth_min_deg + static_cast<double>(azimuth_index) * config.angular_resolution_deg) * kDeg;
  const double el =
      (config.elevation_min_deg + static_cast<double>(elevation_index) * config.angular_resolution_deg) * kDeg;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

ScanResult scan_detailed(const treegen::Mesh& mesh, const ScannerConfig& config, Exec exec) {
  config.validate();
  if (mesh.empty()) fail(ErrorCode::EmptyInput, "mesh has no faces");
  std::vector<std::array<std::uint32_t, 3>> tris;
  tris.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) tris.push_back(f.v);
  const TriangleBvh bvh(mesh.vertices, tris);

  const RayGrid grid = ray_grid(config);
  const std::size_t columns = config.positions.size() * grid.azimuth_steps;
  std::vector<std::vector<Sample>> hits(columns);

  const auto column = [&](std::size_t c) {
    const std::size_t pos = c / grid.azimuth_steps;
    const std::size_t i = c % grid.azimuth_steps;
    auto& out = hits[c];
    for (std::size_t j = 0; j < grid.elevation_steps; ++j) {
      const Ray ray{config.positions[pos], ray_direction(config, i, j)};
      const auto hit = bvh.first_hit(ray, config.max_range);
      if (!hit) continue;
      double r = hit->t;
      if (config.range_noise_sigma > 0.0) {
        r += config.range_noise_sigma * ray_normal(config.seed, pos, i * grid.elevation_steps + j);
      }
      const auto& face = mesh.faces[hit->triangle];
      out.push_back({(ray.origin + r * ray.dir).cast<float>(), face.organ_id, face.instance_id, hit->triangle, hit->t});
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(columns); ++c) column(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < columns; ++c) column(c);
  }

  std::size_t total = 0;
  for (const auto& h : hits) total += h.size();
  ScanResult result;
  result.cloud.points.reserve(total);
  result.cloud.semantic.reserve(total);
  result.cloud.instance.reserve(total);
  result.triangle.reserve(total);
  result.position.reserve(total);
  result.range.reserve(total);
  for (std::size_t c = 0; c < columns; ++c) {
    for (const auto& s : hits[c]) {
      result.cloud.push_back(s.point, s.organ, s.instance);
      result.triangle.push_back(s.triangle);
      result.position.push_back(static_cast<std::uint32_t>(c / grid.azimuth_steps));
      result.range.push_back(s.range);
    }
    std::vector<Sample>().swap(hits[c]);
  }
  return result;
}

LabeledCloud scan(const treegen::Mesh& mesh, const ScannerConfig& config, Exec exec) {
  return scan_detailed(mesh, config, exec).cloud;
}

std::vector<Vec3> default_tls_positions(const treegen::TreeModel& model, std::size_t n_positions, double standoff) {
  if (n_positions < 1) fail(ErrorCode::InvalidArgument, "need at least one scanner position");
  if (!(standoff > 0.0)) fail(ErrorCode::InvalidArgument, "standoff must be positive");
  const auto& mesh = model.mesh;
  if (mesh.vertices.empty()) fail(ErrorCode::EmptyInput, "model has no vertices");
  const Aabb box = bounds(mesh.vertices);
  double z_lo = std::numeric_limits<double>::infinity();
  double z_hi = -z_lo;
  for (const auto& f : mesh.faces) {
    if (f.organ_id != 0) continue;
    for (auto v : f.v) {
      z_lo = std::min(z_lo, static_cast<double>(mesh.vertices[v].z()));
      z_hi = std::max(z_hi, static_cast<double>(mesh.vertices[v].z()));
    }
  }
  if (!(z_lo <= z_hi)) {
    z_lo = box.lo.z();
    z_hi = box.hi.z();
  }
  const double radius = 0.5 * std::max(box.extent().x(), box.extent().y()) + standoff;
  const Vec3 c = box.center();
  std::vector<Vec3> out;
  out.reserve(n_positions);
  for (std::size_t k = 0; k < n_positions; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_positions);
    out.emplace_back(c.x() + radius * std::cos(a), c.y() + radius * std::sin(a), 0.5 * (z_lo + z_hi));
  }
  return out;
}

}  // namespace forge::vls
