#include "doctest.h"
#include "test_support.hpp"

#include "forge/core/error.hpp"
#include "forge/treegen/treegen.hpp"
#include "forge/vls/scanner.hpp"

#include <cmath>
#include <numbers>

using namespace forge;
using namespace forge::vls;
using treegen::Face;
using treegen::Mesh;

namespace {

// Axis-aligned quad in the plane x = `x`, spanning y,z in [-h, h].
void add_quad(Mesh& m, double x, double h, int organ, int instance) {
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  for (const auto& [y, z] : {std::pair{-h, -h}, {h, -h}, {h, h}, {-h, h}}) {
    m.vertices.emplace_back(static_cast<float>(x), static_cast<float>(y), static_cast<float>(z));
  }
  m.faces.push_back(Face{{base, base + 1, base + 2}, organ, instance});
  m.faces.push_back(Face{{base, base + 2, base + 3}, organ, instance});
}

Mesh random_soup(std::size_t n, Rng& rng) {
  Mesh m;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 c(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    for (int k = 0; k < 3; ++k) {
      m.vertices.push_back((c + 0.3 * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))).cast<float>());
    }
    m.faces.push_back(Face{{base, base + 1, base + 2}, 0, static_cast<int>(i)});
  }
  return m;
}

// Plane distance of p to triangle, from the cross-product normal.
double plane_distance(const Vec3& p, const std::array<Vec3, 3>& t) {
  const Vec3 n = (t[1] - t[0]).cross(t[2] - t[0]).normalized();
  return std::abs(n.dot(p - t[0]));
}

ScannerConfig one_scanner(double resolution) {
  ScannerConfig cfg;
  cfg.positions = {Vec3::Zero()};
  cfg.angular_resolution_deg = resolution;
  return cfg;
}

treegen::TreeStats small_stats() {
  treegen::TreeStats s;
  s.trunk_height = 2.0;
  s.trunk_base_radius = 0.05;
  s.trunk_skeleton = {Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, 2)};
  for (int i = 0; i < 4; ++i) {
    treegen::BranchRecord r;
    r.insertion = 0.4 + 0.1 * i;
    r.azimuth = 1.5 * i;
    r.elevation = 0.3;
    r.length = 0.6;
    r.base_radius = 0.015;
    s.branch_records.push_back(r);
  }
  s.canonicalize();
  return s;
}

}  // namespace

TEST_CASE("intersect_triangle: both faces reflect, misses are misses") {
  const Vec3 a(1, -1, -1), b(1, 1, -1), c(1, 0, 1);
  const Ray fwd{Vec3::Zero(), Vec3::UnitX()};
  const Ray back{Vec3(2, 0, 0), -Vec3::UnitX()};
  REQUIRE(intersect_triangle(fwd, a, b, c, 10.0));
  CHECK(*intersect_triangle(fwd, a, b, c, 10.0) == doctest::Approx(1.0));
  CHECK(intersect_triangle(back, a, b, c, 10.0));
  CHECK(!intersect_triangle(fwd, a, b, c, 0.5));
  CHECK(!intersect_triangle(Ray{Vec3::Zero(), -Vec3::UnitX()}, a, b, c, 10.0));
  CHECK(!intersect_triangle(Ray{Vec3(0, 5, 0), Vec3::UnitX()}, a, b, c, 10.0));
}

TEST_CASE("bvh: first hit equals the exhaustive scan on random soups") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Mesh m = random_soup(1 + rng.index(200), rng);
    std::vector<std::array<std::uint32_t, 3>> tris;
    for (const auto& f : m.faces) tris.push_back(f.v);
    const TriangleBvh bvh(m.vertices, tris);
    int hits = 0;
    for (int r = 0; r < 1000; ++r) {
      const Vec3 o(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
      const Vec3 target(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Ray ray{o, (target - o).normalized()};
      const auto fast = bvh.first_hit(ray, 100.0);
      const auto slow = bvh.first_hit_exhaustive(ray, 100.0);
      REQUIRE(fast.has_value() == slow.has_value());
      if (fast) {
        ++hits;
        CHECK(fast->t == slow->t);
        CHECK(fast->triangle == slow->triangle);
      }
    }
    CHECK(hits > 0);
  }
}

TEST_CASE("bvh: axis-aligned rays through shared edges") {
  Mesh m;
  add_quad(m, 1.0, 1.0, 0, 0);
  std::vector<std::array<std::uint32_t, 3>> tris;
  for (const auto& f : m.faces) tris.push_back(f.v);
  const TriangleBvh bvh(m.vertices, tris);
  // the diagonal edge y == z is shared by both triangles; watertightness means no leak
  for (double s : {-0.5, 0.0, 0.25, 0.999}) {
    const auto hit = bvh.first_hit(Ray{Vec3(0, s, s), Vec3::UnitX()}, 10.0);
    REQUIRE(hit);
    CHECK(hit->t == 1.0);
    CHECK(hit->triangle == 0);
  }
}

TEST_CASE("scan: noiseless points lie on a facing quad") {
  Mesh m;
  add_quad(m, 2.0, 1.0, 1, 3);
  auto cfg = one_scanner(1.0);
  const auto res = scan_detailed(m, cfg);
  REQUIRE(res.cloud.size() > 100);
  for (std::size_t i = 0; i < res.cloud.size(); ++i) {
    CHECK(std::abs(res.cloud.points[i].x() - 2.0f) <= 1e-6f);
    CHECK(res.cloud.semantic[i] == 1);
    CHECK(res.cloud.instance[i] == 3);
  }
}

TEST_CASE("scan: a covering near quad hides the far one") {
  Mesh m;
  add_quad(m, 3.0, 1.0, 1, 9);  // far
  add_quad(m, 1.0, 2.0, 0, 1);  // near, subtends a wider cone
  const auto cloud = scan(m, one_scanner(0.5));
  REQUIRE(!cloud.empty());
  for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(cloud.instance[i] == 1);
}

TEST_CASE("scan: ray grid counts") {
  const auto coarse = ray_grid(one_scanner(0.3));
  const auto fine = ray_grid(one_scanner(0.03));
  CHECK(coarse.azimuth_steps == 1200);
  CHECK(coarse.elevation_steps == 500);
  CHECK(fine.azimuth_steps == 10 * coarse.azimuth_steps);
  CHECK(fine.elevation_steps == 10 * coarse.elevation_steps);
  CHECK(fine.per_position() == 100 * coarse.per_position());
  CHECK(ray_grid(one_scanner(0.06)).azimuth_steps == 6000);
  CHECK((ray_direction(one_scanner(1.0), 0, 60) - Vec3::UnitX()).norm() < 1e-12);
}

TEST_CASE("scan: tree invariants, monotone density, determinism") {
  const auto model = treegen::generate_tree(small_stats(), 3, 1);
  ScannerConfig cfg;
  cfg.positions = default_tls_positions(model, 4, 2.0);
  std::size_t prev = 0;
  for (double res : {2.0, 1.0, 0.5}) {
    cfg.angular_resolution_deg = res;
    const auto r = scan_detailed(model.mesh, cfg);
    CHECK(r.cloud.size() >= prev);
    prev = r.cloud.size();
  }
  cfg.angular_resolution_deg = 0.5;
  const auto r = scan_detailed(model.mesh, cfg);
  std::vector<std::array<std::uint32_t, 3>> tris;
  for (const auto& f : model.mesh.faces) tris.push_back(f.v);
  const TriangleBvh bvh(model.mesh.vertices, tris);
  for (std::size_t i = 0; i < r.cloud.size(); i += 7) {
    const auto& face = model.mesh.faces[r.triangle[i]];
    CHECK(r.cloud.semantic[i] == face.organ_id);
    CHECK(r.cloud.instance[i] == face.instance_id);
    const Vec3 p = r.cloud.points[i].cast<double>();
    CHECK(plane_distance(p, bvh.triangle(r.triangle[i])) <= 1e-6);
    // nothing strictly in front of the point along its own ray
    const Vec3 o = cfg.positions[r.position[i]];
    const auto hit = bvh.first_hit_exhaustive(Ray{o, (p - o).normalized()}, 1e9);
    REQUIRE(hit);
    CHECK(hit->t >= (p - o).norm() - 1e-5);
  }
  CHECK(r.cloud == scan(model.mesh, cfg, Exec::serial));
}

TEST_CASE("scan: range noise stays on the ray and is seeded") {
  Mesh m;
  add_quad(m, 2.0, 1.0, 0, 0);
  auto cfg = one_scanner(1.0);
  cfg.range_noise_sigma = 0.01;
  cfg.seed = 5;
  const auto a = scan_detailed(m, cfg);
  const auto b = scan_detailed(m, cfg, Exec::serial);
  CHECK(a.cloud == b.cloud);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < a.cloud.size(); ++i) {
    const Vec3 p = a.cloud.points[i].cast<double>();
    const double dev = p.norm() - a.range[i];
    sum += dev;
    sum2 += dev * dev;
    // direction unchanged: the noiseless hit and p are collinear with the origin
    const Vec3 dir = p.normalized();
    CHECK(std::abs(dir.x() * a.range[i] - 2.0) < 1e-5);
  }
  const double n = static_cast<double>(a.cloud.size());
  CHECK(std::abs(sum / n) < 0.002);
  CHECK(std::sqrt(sum2 / n) == doctest::Approx(0.01).epsilon(0.2));
  cfg.seed = 6;
  CHECK(!(scan(m, cfg) == a.cloud));
}

TEST_CASE("scan: errors") {
  CHECK_THROWS_AS(scan(Mesh{}, one_scanner(1.0)), Error);
  Mesh m;
  add_quad(m, 2.0, 1.0, 0, 0);
  auto cfg = one_scanner(0.0);
  CHECK_THROWS_AS(scan(m, cfg), Error);
  cfg = one_scanner(1.0);
  cfg.range_noise_sigma = -1;
  CHECK_THROWS_AS(scan(m, cfg), Error);
}

TEST_CASE("default_tls_positions: circle around the model") {
  const auto model = treegen::generate_tree(small_stats(), 3, 1);
  const Aabb box = bounds(model.mesh.vertices);
  const double radius = 0.5 * std::max(box.extent().x(), box.extent().y()) + 2.0;
  const auto one = default_tls_positions(model, 1, 2.0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].x() == doctest::Approx(box.center().x() + radius));
  CHECK(one[0].y() == doctest::Approx(box.center().y()));
  const auto four = default_tls_positions(model, 4, 2.0);
  REQUIRE(four.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec3 d = four[k] - box.center();
    CHECK(std::abs(std::hypot(d.x(), d.y()) - radius) <= 1e-9);
    CHECK(std::atan2(d.y(), d.x()) == doctest::Approx(std::remainder(k * std::numbers::pi / 2, 2 * std::numbers::pi)));
    CHECK(four[k].z() == doctest::Approx(1.0).epsilon(0.05));
  }
}
