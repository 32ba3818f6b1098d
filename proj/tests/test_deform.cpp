#include "doctest.h"
#include "deform_oracles.hpp"
#include "test_support.hpp"

#include "forge/core/error.hpp"
#include "forge/deform/deform.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

using namespace forge;
using namespace forge::deform;

using namespace forge::oracle;


TEST_CASE("build_lattice: unit, shared-face and majority examples") {
  const auto mats = default_materials(3);
  const auto one = build_lattice(voxel_cloud({{0, 0, 0}}, kH), kH, mats);
  CHECK(one.element_count() == 1);
  CHECK(one.vertex_count() == 8);

  const auto two = build_lattice(voxel_cloud({{0, 0, 0}, {1, 0, 0}}, kH), kH, mats);
  CHECK(two.element_count() == 2);
  CHECK(two.vertex_count() == 12);
  int shared = 0;
  for (auto a : two.element_vertices[0]) {
    for (auto b : two.element_vertices[1]) shared += a == b;
  }
  CHECK(shared == 4);

  LabeledCloud mixed;
  for (int i = 0; i < 5; ++i) mixed.push_back(Vec3f(0.1f * i, 0.1f * i, 0.1f * i), i < 3 ? 0 : 1, -1);
  const auto maj = build_lattice(mixed, 1.0, mats);
  REQUIRE(maj.element_count() == 1);
  CHECK(maj.element_class[0] == 0);
  CHECK(maj.element_material[0] == mats.at(0));

  LabeledCloud tie;
  tie.push_back(Vec3f(0, 0, 0), 2, -1);
  tie.push_back(Vec3f(0.5f, 0.5f, 0.5f), 1, -1);
  CHECK(build_lattice(tie, 1.0, mats).element_class[0] == 1);

  try {
    build_lattice(voxel_cloud({{0, 0, 0}}, 1.0, 7), 1.0, mats);
    FAIL("expected MissingMaterial");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingMaterial);
  }
}

TEST_CASE("reference stiffness matches the independent element oracle and has rigid modes") {
  for (double nu : {0.2, 0.3, 0.45}) {
    const ElementMatrix k = reference_stiffness(nu);
    const Eigen::MatrixXd o = oracle_element(1.0, nu, 1.0);
    CHECK((k - o).norm() <= 1e-12 * o.norm());
    CHECK((k - k.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(o);
    int zero = 0;
    for (Eigen::Index i = 0; i < 24; ++i) {
      CHECK(eig.eigenvalues()[i] > -1e-12);
      zero += eig.eigenvalues()[i] < 1e-10;
    }
    CHECK(zero == 6);
  }
  const auto h = 0.002;
  const Eigen::MatrixXd o = oracle_element(3e5, 0.3, h);
  CHECK((3e5 * h * reference_stiffness(0.3) - o).norm() <= 1e-12 * o.norm());
}

TEST_CASE("assembled stiffness: symmetric, non-negative energy, kernels agree") {
  Rng rng(8);
  const auto mats = default_materials(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto cloud = voxel_cloud(random_column(rng, 6), kH2);
    for (auto& s : cloud.semantic) s = static_cast<int>(rng.index(3));
    for (auto& s : cloud.instance) s = -1;
    const auto lat = build_lattice(cloud, kH2, mats);
    const Eigen::MatrixXd K = assemble_dense(lat);
    CHECK((K - K.transpose()).norm() <= 1e-10 * K.norm());
    std::vector<double> x(3 * lat.vertex_count());
    for (auto& v : x) v = rng.uniform(-1, 1);
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    CHECK(xv.dot(K * xv) >= 0.0);
    const auto ys = apply_stiffness(lat, x, Exec::serial);
    const auto yp = apply_stiffness(lat, x, Exec::parallel);
    CHECK(std::memcmp(ys.data(), yp.data(), ys.size() * sizeof(double)) == 0);
    const Eigen::VectorXd yd = K * xv;
    const Eigen::Map<const Eigen::VectorXd> yv(ys.data(), static_cast<Eigen::Index>(ys.size()));
    CHECK((yd - yv).norm() <= 1e-12 * yd.norm());
  }
}

TEST_CASE("solve_elastic: one free vertex on one element matches the dense system") {
  const auto mats = default_materials(2);
  const auto lat = build_lattice(voxel_cloud({{0, 0, 0}}, kH), kH, mats);
  FixedMask fixed(8, 1);
  fixed[6] = 0;  // corner (1,1,1)
  ForceSpec spec;
  spec.forces.push_back({6, Vec3(1.5, -2.0, 4.0)});
  const auto field = solve_elastic(lat, spec, fixed);
  const auto oracle = dense_solve(lat, spec, fixed);
  CHECK(rel_diff(field.displacement, oracle) <= 1e-8);
  for (std::uint32_t v = 0; v < 8; ++v) {
    if (v != 6) CHECK(field.displacement[v] == Vec3::Zero());
  }
}

TEST_CASE("solve_elastic: small lattices match the dense direct solve") {
  Rng rng(21);
  const auto mats = default_materials(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto keys = random_column(rng, 4);
    auto cloud = voxel_cloud(keys, kH);
    for (auto& s : cloud.semantic) s = static_cast<int>(rng.index(3));
    const auto lat = build_lattice(cloud, kH, mats);
    const auto fixed = lowest_layer_fixed(lat);
    const auto spec = random_forces(lat, fixed, rng, 5.0);
    const auto field = solve_elastic(lat, spec, fixed);
    if (field.frozen_components > 0) continue;
    CHECK(rel_diff(field.displacement, dense_solve(lat, spec, fixed)) <= 1e-8);
  }
}

TEST_CASE("solve_elastic: zero force, linearity, serial/parallel agreement") {
  Rng rng(5);
  const auto mats = default_materials(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto lat = build_lattice(voxel_cloud(random_column(rng, 40), kH, 1), kH, mats);
    const auto fixed = lowest_layer_fixed(lat);
    ForceSpec none;
    const auto zero = solve_elastic(lat, none, fixed);
    for (const auto& u : zero.displacement) CHECK(u == Vec3::Zero());

    const auto spec = random_forces(lat, fixed, rng, 5.0);
    const auto u1 = solve_elastic(lat, spec, fixed);
    const auto u2 = solve_elastic(lat, scaled(spec, 2.0), fixed);
    const auto uh = solve_elastic(lat, scaled(spec, 0.5), fixed);
    std::vector<Vec3> twice, half;
    for (const auto& u : u1.displacement) {
      twice.push_back(2.0 * u);
      half.push_back(0.5 * u);
    }
    CHECK(rel_diff(u2.displacement, twice) <= 1e-8);
    CHECK(rel_diff(uh.displacement, half) <= 1e-8);
    const auto us = solve_elastic(lat, spec, fixed, {}, Exec::serial);
    CHECK(us.displacement == u1.displacement);
    for (std::uint32_t v = 0; v < lat.vertex_count(); ++v) {
      if (fixed[v]) CHECK(u1.displacement[v] == Vec3::Zero());
      CHECK(u1.displacement[v].allFinite());
    }
  }
}

TEST_CASE("solve_elastic: errors and floating components") {
  const auto mats = default_materials(2);
  const auto lat = build_lattice(voxel_cloud({{0, 0, 0}, {0, 0, 1}, {5, 5, 3}}, kH2), kH2, mats);
  CHECK(lat.element_count() == 3);
  try {
    solve_elastic(lat, ForceSpec{}, FixedMask(lat.vertex_count(), 0));
    FAIL("expected UnconstrainedSystem");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnconstrainedSystem);
  }
  ForceSpec big;
  big.forces.push_back({0, Vec3(6, 0, 0)});
  CHECK_THROWS_AS(solve_elastic(lat, big, lowest_layer_fixed(lat)), Error);

  const auto fixed = lowest_layer_fixed(lat);
  ForceSpec all;
  for (std::uint32_t v = 0; v < lat.vertex_count(); ++v) {
    if (!fixed[v]) all.forces.push_back({v, Vec3(1, 1, 1)});
  }
  const auto field = solve_elastic(lat, all, fixed);
  CHECK(field.frozen_components == 1);
  CHECK(field.frozen_vertices == 8);
  const auto& far = lat.element_vertices[lat.element_index.at({5, 5, 3})];
  for (auto v : far) CHECK(field.displacement[v] == Vec3::Zero());
  double moved = 0.0;
  for (const auto& u : field.displacement) moved = std::max(moved, u.norm());
  CHECK(moved > 0.0);

  SolverOptions starve;
  starve.max_iter_factor = 1e-9;
  try {
    solve_elastic(lat, all, fixed, starve);
    FAIL("expected SolverFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SolverFailure);
  }
}

TEST_CASE("apply_deformation: identity, translation, trilinear oracle, coverage") {
  Rng rng(3);
  const auto mats = default_materials(3);
  auto cloud = test::random_cloud(500, 4, 0.05);
  const auto lat = build_lattice(cloud, 0.01, mats);
  DeformField zero;
  zero.displacement.assign(lat.vertex_count(), Vec3::Zero());
  CHECK(apply_deformation(cloud, lat, zero) == cloud);

  DeformField shift;
  shift.displacement.assign(lat.vertex_count(), Vec3(0.01, -0.02, 0.005));
  const auto moved = apply_deformation(cloud, lat, shift);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK((moved.points[i].cast<double>() - cloud.points[i].cast<double>() - Vec3(0.01, -0.02, 0.005)).norm() < 1e-7);
  }
  CHECK(moved.semantic == cloud.semantic);
  CHECK(moved.instance == cloud.instance);

  DeformField field;
  for (std::size_t v = 0; v < lat.vertex_count(); ++v) field.displacement.emplace_back(rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3));
  const auto out = apply_deformation(cloud, lat, field);
  const Aabb box = bounds(cloud.points);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    // locate the cell by hand
    const Vec3 p = cloud.points[i].cast<double>();
    const Vec3 g = (p - box.lo) / 0.01;
    int c[3];
    double f[3];
    for (int d = 0; d < 3; ++d) {
      c[d] = std::min(static_cast<int>(std::floor(g[d])), lat.indexer.last.x * (d == 0) + lat.indexer.last.y * (d == 1) + lat.indexer.last.z * (d == 2));
      f[d] = g[d] - c[d];
    }
    Vec3 u = Vec3::Zero();
    for (int dx = 0; dx < 2; ++dx) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dz = 0; dz < 2; ++dz) {
          const VoxelKey corner{c[0] + dx, c[1] + dy, c[2] + dz};
          const auto v = std::lower_bound(lat.vertices.begin(), lat.vertices.end(), corner) - lat.vertices.begin();
          REQUIRE(lat.vertices[static_cast<std::size_t>(v)] == corner);
          const double w = (dx ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dz ? f[2] : 1 - f[2]);
          u += w * field.displacement[static_cast<std::size_t>(v)];
        }
      }
    }
    CHECK((out.points[i].cast<double>() - (p + u)).norm() < 1e-7);
  }

  LabeledCloud outside = cloud;
  outside.points[0] = Vec3f(10, 10, 10);
  try {
    apply_deformation(outside, lat, zero);
    FAIL("expected LatticeCoverageError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LatticeCoverageError);
  }
}

TEST_CASE("augment: zero bound identity, labels kept, seeded") {
  const auto mats = default_materials(3);
  std::vector<VoxelKey> keys;
  for (int z = 0; z < 30; ++z) {
    keys.push_back({0, 0, z});
    keys.push_back({1, 0, z});
  }
  for (int x = 2; x < 12; ++x) keys.push_back({x, 0, 20});
  auto cloud = voxel_cloud(keys, kH);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    cloud.semantic[i] = cloud.points[i].x() > 2 * kH ? 1 : 0;
    cloud.instance[i] = cloud.semantic[i];
  }
  const auto still = augment(cloud, 3, kH, mats, 0.0, 7);
  REQUIRE(still.size() == 3);
  for (const auto& v : still) CHECK(v == cloud);

  const auto a = augment(cloud, 3, kH, mats, 5.0, 7);
  const auto b = augment(cloud, 3, kH, mats, 5.0, 7, {}, Exec::serial);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i].size() == cloud.size());
    CHECK(a[i].semantic == cloud.semantic);
    CHECK(a[i].instance == cloud.instance);
    CHECK(!(a[i].points == cloud.points));
  }
  CHECK(!(a[0].points == a[1].points));
  CHECK(augment(cloud, 3, kH, mats, 5.0, 8)[0] != a[0]);
}

TEST_CASE("materials: json and validation") {
  const auto m = materials_from_json(nlohmann::json::parse(R"({"0": {"E": 2e6, "nu": 0.25}, "3": {"E": 1e4, "nu": 0.4}})"));
  CHECK(m.at(0) == Material{2e6, 0.25});
  CHECK(m.at(3) == Material{1e4, 0.4});
  CHECK(materials_from_json(materials_to_json(m)) == m);
  CHECK_THROWS_AS(materials_from_json(nlohmann::json::parse(R"({"0": {"E": 1, "nu": 0.5}})")), Error);
  CHECK_THROWS_AS(materials_from_json(nlohmann::json::parse(R"({"x": {"E": 1, "nu": 0.3}})")), Error);
}
