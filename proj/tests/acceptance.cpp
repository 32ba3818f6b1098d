// Acceptance suite: one pass/fail line per criterion, exit status 0 when all pass.

#include "deform_oracles.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include "forge/cli/cli.hpp"
#include "forge/core/error.hpp"
#include "forge/deform/deform.hpp"
#include "forge/instgroup/instgroup.hpp"
#include "forge/io/standard_format.hpp"
#include "forge/metrics/metrics.hpp"
#include "forge/protocol/protocol.hpp"
#include "forge/treegen/treegen.hpp"
#include "forge/vls/bvh.hpp"
#include "forge/vls/scanner.hpp"

#include <chrono>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace forge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects the first few failures of a criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    std::ostringstream s;
    s << summary << ", " << checks_ << " checks";
    if (failures_) s << ", " << failures_ << " failed: " << notes_;
    return {failures_ == 0, s.str()};
  }

 private:
  std::size_t checks_ = 0, failures_ = 0;
  std::string notes_;
};

// ---------------------------------------------------------------- AC1

Outcome metric_oracles() {
  Checker c;
  Rng rng(1001);
  std::size_t ap_values = 0;
  for (int scene = 0; scene < 200; ++scene) {
    const auto s = oracle::random_scene(rng);
    const auto sem = metrics::semantic_eval(s.gt, s.pred_semantic, static_cast<std::size_t>(s.n_classes));
    for (const auto& [cls, k] : oracle::semantic_counts(s.gt.semantic, s.pred_semantic, s.n_classes)) {
      const auto& got = sem.per_class.at(cls);
      const double tp = static_cast<double>(k.tp), fp = static_cast<double>(k.fp), fn = static_cast<double>(k.fn);
      const auto ratio = [](double a, double b) { return b > 0 ? std::optional<double>(a / b) : std::nullopt; };
      const auto iou = ratio(tp, tp + fp + fn);
      const auto p = ratio(tp, tp + fp);
      const auto r = ratio(tp, tp + fn);
      std::optional<double> f1;
      if (p && r) f1 = *p + *r > 0 ? 2 * *p * *r / (*p + *r) : 0.0;
      c.expect(got.iou == iou && got.precision == p && got.recall == r && got.f1 == f1,
               "semantic mismatch in scene " + std::to_string(scene));
    }
    std::vector<int> classes(static_cast<std::size_t>(s.n_classes));
    std::iota(classes.begin(), classes.end(), 0);
    const auto inst = metrics::instance_eval(s.gt, s.preds, classes);
    for (int cls : classes) {
      const auto it = inst.per_class.find(cls);
      for (std::size_t t = 0; t < inst.thresholds.size(); ++t) {
        const auto want = oracle::greedy_ap(s.gt, s.preds, cls, inst.thresholds[t]);
        if (!want) {
          c.expect(it == inst.per_class.end(), "AP reported for a class without instances");
          continue;
        }
        ++ap_values;
        c.expect(it != inst.per_class.end() && std::abs(it->second.ap_by_threshold[t] - *want) <= 1e-12,
                 "AP differs from the greedy oracle in scene " + std::to_string(scene));
      }
      if (it == inst.per_class.end()) continue;
      for (std::size_t t = 1; t < inst.thresholds.size(); ++t) {
        c.expect(it->second.ap_by_threshold[t] <= it->second.ap_by_threshold[t - 1],
                 "AP increases with the threshold in scene " + std::to_string(scene));
      }
    }
  }
  return c.outcome("200 scenes, " + std::to_string(ap_values) + " AP values vs oracle");
}

// ---------------------------------------------------------------- AC2

Outcome grouping_round_trip() {
  Checker c;
  Rng rng(2002);
  const std::vector<int> classes{0, 1, 2};
  instgroup::GroupingParams params;
  params.min_points = {{0, 1}, {1, 1}, {2, 1}};
  std::size_t instances = 0;
  for (int k = 0; k < 50; ++k) {
    const auto cloud = oracle::blob_cloud(rng, 2 + rng.index(7), 60, 3, 1.5);
    const auto out = instgroup::oracle_output(cloud, 3, 0.0, rng.next());
    const auto preds = instgroup::group(cloud, out, params, classes);
    instances += preds.size();
    const auto r = metrics::instance_eval(cloud, preds, classes);
    c.expect(r.ap25 == 1.0 && r.ap50 == 1.0 && r.ap == 1.0, "cloud " + std::to_string(k) + " AP below 1");
  }
  return c.outcome("50 clouds, " + std::to_string(instances) + " instances recovered");
}

// ---------------------------------------------------------------- AC3

Outcome grouping_brute_force() {
  Checker c;
  Rng rng(3003);
  std::size_t points = 0, max_n = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + rng.index(2000);
    const double r = rng.uniform(0.01, 0.08);
    std::vector<Vec3> pts;
    // clustered and scattered points, plus pairs at exactly r
    const std::size_t clusters = 1 + rng.index(10);
    std::vector<Vec3> centers;
    for (std::size_t j = 0; j < clusters; ++j) centers.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && rng.uniform() < 0.05) {
        pts.push_back(pts[rng.index(i)] + Vec3(r, 0, 0));
      } else if (rng.uniform() < 0.7) {
        pts.push_back(centers[rng.index(clusters)] + 0.05 * Vec3(rng.normal(), rng.normal(), rng.normal()));
      } else {
        pts.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
      }
    }
    points += n;
    max_n = std::max(max_n, n);
    const auto want = oracle::components(pts, r);
    for (const auto exec : {Exec::parallel, Exec::serial}) {
      const auto got = instgroup::radius_components(pts, r, exec);
      c.expect(oracle::canonical(std::vector<std::size_t>(got.begin(), got.end())) == want,
               "partition differs on cloud " + std::to_string(k));
    }
  }
  return c.outcome("100 clouds, " + std::to_string(points) + " points, n <= " + std::to_string(max_n));
}

// ---------------------------------------------------------------- AC4

Outcome deformation_physics() {
  using namespace forge::deform;
  Checker c;
  Rng rng(4004);
  const auto mats = default_materials(3);

  for (int k = 0; k < 20; ++k) {
    auto cloud = oracle::voxel_cloud(oracle::random_column(rng, 40), oracle::kH);
    for (auto& s : cloud.semantic) s = static_cast<int>(rng.index(3));
    const auto lat = build_lattice(cloud, oracle::kH, mats);
    const auto fixed = lowest_layer_fixed(lat);
    const auto zero = solve_elastic(lat, ForceSpec{}, fixed);
    bool exact = true;
    for (const auto& u : zero.displacement) exact &= u == Vec3::Zero();
    c.expect(exact, "non-zero displacement without force");
    const auto moved = apply_deformation(cloud, lat, zero);
    c.expect(moved.points.size() == cloud.points.size() &&
                 std::memcmp(moved.points.data(), cloud.points.data(), cloud.points.size() * sizeof(Vec3f)) == 0,
             "zero field moved points");

    const auto spec = oracle::random_forces(lat, fixed, rng, 5.0);
    const auto u1 = solve_elastic(lat, spec, fixed);
    const auto u2 = solve_elastic(lat, oracle::scaled(spec, 2.0), fixed);
    std::vector<Vec3> twice;
    for (const auto& u : u1.displacement) twice.push_back(2.0 * u);
    c.expect(oracle::rel_diff(u2.displacement, twice) <= 1e-8, "u(2f) != 2 u(f) on lattice " + std::to_string(k));
  }

  int dense = 0;
  double worst = 0.0;
  for (int k = 0; k < 200 && dense < 40; ++k) {
    auto cloud = oracle::voxel_cloud(oracle::random_column(rng, 4), oracle::kH);
    for (auto& s : cloud.semantic) s = static_cast<int>(rng.index(3));
    const auto lat = build_lattice(cloud, oracle::kH, mats);
    // every vertex of the first element fixed keeps each lattice anchored
    FixedMask fixed(lat.vertex_count(), 0);
    for (auto v : lat.element_vertices[0]) fixed[v] = 1;
    if (lat.element_count() == 1) fixed[lat.element_vertices[0][6]] = 0;
    const auto spec = oracle::random_forces(lat, fixed, rng, 5.0);
    const auto field = solve_elastic(lat, spec, fixed);
    if (field.frozen_components > 0) continue;
    const double d = oracle::rel_diff(field.displacement, oracle::dense_solve(lat, spec, fixed));
    worst = std::max(worst, d);
    c.expect(d <= 1e-8, "CG vs dense relative difference " + std::to_string(d));
    ++dense;
  }
  c.expect(dense >= 40, "too few dense comparisons");

  // voxel 0.001 m and |f| <= 5 N on a solid L of trunk and branch voxels
  LabeledCloud shape;
  const double h = 0.001;
  for (int z = 0; z < 30; ++z) {
    for (int x = 0; x < 12; ++x) {
      for (int y = 0; y < 2; ++y) {
        const bool trunk = x < 2;
        if (!trunk && z < 20) continue;
        for (double f : {0.3, 0.7}) {
          shape.push_back(Vec3f(static_cast<float>((x + f) * h), static_cast<float>((y + f) * h), static_cast<float>((z + f) * h)),
                          trunk ? 0 : 1, trunk ? 0 : 1);
        }
      }
    }
  }
  const auto variants = augment(shape, 4, h, default_materials(2), 5.0, 99);
  c.expect(variants.size() == 4, "variant count");
  bool moved = false;
  for (const auto& v : variants) {
    c.expect(v.size() == shape.size() && v.semantic == shape.semantic && v.instance == shape.instance,
             "augment changed labels or counts");
    moved |= !(v.points == shape.points);
  }
  c.expect(moved, "augment left every variant unchanged");
  for (const auto& v : augment(shape, 2, h, default_materials(2), 0.0, 99)) c.expect(v == shape, "zero bound moved points");

  std::ostringstream s;
  s << "20 lattices zero/linear, " << dense << " dense solves (worst " << std::scientific << std::setprecision(1) << worst
    << "), augment at 1 mm / 5 N";
  return c.outcome(s.str());
}

// ---------------------------------------------------------------- AC5

void add_quad(treegen::Mesh& m, double x, double y0, double y1, double z0, double z1, int organ, int instance) {
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  for (const auto& [y, z] : {std::pair{y0, z0}, {y1, z0}, {y1, z1}, {y0, z1}}) {
    m.vertices.emplace_back(static_cast<float>(x), static_cast<float>(y), static_cast<float>(z));
  }
  m.faces.push_back({{base, base + 1, base + 2}, organ, instance});
  m.faces.push_back({{base, base + 2, base + 3}, organ, instance});
}

std::optional<vls::Hit> exhaustive_first_hit(const std::vector<std::array<Vec3, 3>>& tris, const vls::Ray& ray, double t_max) {
  std::optional<vls::Hit> best;
  for (std::uint32_t i = 0; i < tris.size(); ++i) {
    const auto t = vls::intersect_triangle(ray, tris[i][0], tris[i][1], tris[i][2], t_max);
    if (t && (!best || *t < best->t)) best = vls::Hit{*t, i};
  }
  return best;
}

Outcome vls_soundness() {
  Checker c;
  Rng rng(5005);
  std::size_t hits = 0;
  for (int mesh = 0; mesh < 10; ++mesh) {
    const std::size_t n = 1 + rng.index(200);
    std::vector<Vec3f> verts;
    std::vector<std::array<std::uint32_t, 3>> faces;
    std::vector<std::array<Vec3, 3>> tris;
    for (std::uint32_t i = 0; i < n; ++i) {
      const Vec3 center(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      std::array<Vec3, 3> t;
      for (int k = 0; k < 3; ++k) {
        verts.push_back((center + 0.3 * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))).cast<float>());
        t[static_cast<std::size_t>(k)] = verts.back().cast<double>();
      }
      faces.push_back({3 * i, 3 * i + 1, 3 * i + 2});
      tris.push_back(t);
    }
    const vls::TriangleBvh bvh(verts, faces);
    for (int r = 0; r < 1000; ++r) {
      const Vec3 o(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
      const Vec3 target(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const vls::Ray ray{o, (target - o).normalized()};
      const auto fast = bvh.first_hit(ray, 100.0);
      const auto slow = exhaustive_first_hit(tris, ray, 100.0);
      c.expect(fast.has_value() == slow.has_value() && (!fast || (fast->t == slow->t && fast->triangle == slow->triangle)),
               "BVH first hit differs on mesh " + std::to_string(mesh));
      hits += fast ? 1 : 0;
    }
  }

  // near quad covers y in [0, 0.5] at x = 1; its shadow on the far plane x = 3 is y in [0, 1.5]
  treegen::Mesh scene;
  add_quad(scene, 3.0, -1.0, 1.0, -1.0, 1.0, 1, 1);
  add_quad(scene, 1.0, 0.0, 0.5, -0.5, 0.5, 0, 0);
  vls::ScannerConfig cfg;
  cfg.positions = {Vec3::Zero()};
  cfg.angular_resolution_deg = 0.5;
  const auto res = vls::scan_detailed(scene, cfg);
  std::vector<std::array<Vec3, 3>> tris;
  for (const auto& f : scene.faces) {
    tris.push_back({scene.vertices[f.v[0]].cast<double>(), scene.vertices[f.v[1]].cast<double>(),
                    scene.vertices[f.v[2]].cast<double>()});
  }
  std::size_t far = 0, near = 0;
  for (std::size_t i = 0; i < res.cloud.size(); ++i) {
    const Vec3 p = res.cloud.points[i].cast<double>();
    const auto& t = tris[res.triangle[i]];
    const Vec3 normal = (t[1] - t[0]).cross(t[2] - t[0]).normalized();
    c.expect(std::abs(normal.dot(p - t[0])) <= 1e-6, "point off its surface");
    const auto first = exhaustive_first_hit(tris, vls::Ray{Vec3::Zero(), p.normalized()}, 100.0);
    c.expect(first && tris[first->triangle][0].x() == t[0].x(), "point behind an occluder");
    if (res.cloud.instance[i] == 1) {
      ++far;
      const double y_near = p.y() / p.x(), z_near = p.z() / p.x();  // ray at x = 1
      c.expect(!(y_near > 1e-9 && y_near < 0.5 - 1e-9 && std::abs(z_near) < 0.5 - 1e-9), "far point inside the shadow");
    } else {
      ++near;
    }
  }
  c.expect(far > 0 && near > 0, "both quads must be seen");

  vls::ScannerConfig coarse, fine;
  coarse.angular_resolution_deg = 0.3;
  fine.angular_resolution_deg = 0.03;
  const auto g0 = vls::ray_grid(coarse), g1 = vls::ray_grid(fine);
  c.expect(g1.azimuth_steps == 10 * g0.azimuth_steps && g1.elevation_steps == 10 * g0.elevation_steps,
           "grid refinement is not x10 per axis");

  std::ostringstream s;
  s << "10000 rays (" << hits << " hits), occlusion scene " << near << " near + " << far << " far points, grid "
    << g0.azimuth_steps << "x" << g0.elevation_steps << " -> " << g1.azimuth_steps << "x" << g1.elevation_steps;
  return c.outcome(s.str());
}

// ---------------------------------------------------------------- AC6

Outcome treegen_invariants() {
  using namespace forge::treegen;
  Checker c;
  std::vector<TreeStats> bases;
  Rng rng(6006);
  for (int i = 0; i < 6; ++i) bases.push_back(test::simple_stats(rng.uniform(2.5, 4.5), 4 + static_cast<int>(rng.index(7)), rng.next()));
  const TreeGenConfig cfg;
  const auto trees = generate_population(bases, 150, 77, 3, cfg);
  c.expect(trees.size() == 150, "population size");
  std::size_t segments = 0;
  for (std::size_t k = 0; k < trees.size(); ++k) {
    const auto& tree = trees[k];
    const auto& sk = tree.model.skeleton;
    segments += sk.size();
    const std::string tag = "tree " + std::to_string(k);
    // tapering along every root-to-tip path
    bool tapered = true;
    for (const auto& s : sk) {
      tapered &= s.end_radius <= s.start_radius;
      if (s.parent >= 0) tapered &= s.start_radius <= sk[static_cast<std::size_t>(s.parent)].end_radius;
    }
    c.expect(tapered, tag + " radius grows");
    // acyclic with a single root: parents come first
    int roots = 0;
    bool ordered = true;
    for (std::size_t i = 0; i < sk.size(); ++i) {
      if (sk[i].parent < 0) ++roots;
      else ordered &= static_cast<std::size_t>(sk[i].parent) < i;
    }
    c.expect(roots == 1 && ordered, tag + " skeleton is not a rooted tree");
    // every capsule pair of unrelated organs
    std::map<int, int> parent_instance;
    for (const auto& s : sk) {
      if (s.parent >= 0 && sk[static_cast<std::size_t>(s.parent)].instance_id != s.instance_id) {
        parent_instance[s.instance_id] = sk[static_cast<std::size_t>(s.parent)].instance_id;
      }
    }
    const auto related = [&](int a, int b) {
      return a == b || (parent_instance.count(a) && parent_instance[a] == b) ||
             (parent_instance.count(b) && parent_instance[b] == a);
    };
    std::size_t collisions = 0;
    for (std::size_t i = 0; i < sk.size(); ++i) {
      for (std::size_t j = i + 1; j < sk.size(); ++j) {
        if (related(sk[i].instance_id, sk[j].instance_id)) continue;
        const double d = segment_distance(sk[i].start, sk[i].end, sk[j].start, sk[j].end);
        if (d < sk[i].capsule_radius() + sk[j].capsule_radius() - cfg.collision_tolerance) ++collisions;
      }
    }
    c.expect(collisions == 0, tag + " has " + std::to_string(collisions) + " colliding capsules");
    // interpolated scalars inside the two parents' envelope
    const auto& a = bases[tree.base_a];
    const auto& b = bases[tree.base_b];
    const auto inside = [](double v, double x, double y) {
      return v >= std::min(x, y) - 1e-12 && v <= std::max(x, y) + 1e-12;
    };
    bool env = inside(tree.stats.trunk_height, a.trunk_height, b.trunk_height) &&
               inside(tree.stats.trunk_base_radius, a.trunk_base_radius, b.trunk_base_radius);
    for (std::size_t o = 0; o < tree.stats.branch_count_per_order.size(); ++o) {
      const auto count = [&](const TreeStats& s) {
        return o < s.branch_count_per_order.size() ? static_cast<double>(s.branch_count_per_order[o]) : 0.0;
      };
      env &= inside(static_cast<double>(tree.stats.branch_count_per_order[o]), count(a), count(b));
    }
    c.expect(env, tag + " statistics outside the base envelope");
  }
  return c.outcome("150 trees from 6 bases, " + std::to_string(segments) + " segments");
}

// ---------------------------------------------------------------- AC7

Outcome protocol_arithmetic() {
  Checker c;
  const auto m = test::cos_layout();
  protocol::ProtocolConfig cfg;
  cfg.folds = 12;
  cfg.seed = 7007;
  const auto plan = protocol::plan_protocol(m, cfg);
  c.expect(plan.folds.size() == 12, "fold count");
  std::set<std::string> seen;
  for (const auto& f : plan.folds) {
    std::map<std::string, int> per;
    for (const auto& id : f.base_trees) {
      c.expect(seen.insert(id).second, "tree in two folds");
      ++per[m.sample_meta.at(id).at("orchard")];
    }
    c.expect(per.size() == 2 && per.begin()->second == 3 && per.rbegin()->second == 3, "fold is not 3 + 3");
  }
  c.expect(seen.size() == 72, "folds do not cover the 72 base trees");
  const double table[] = {0.23, 0.46, 0.69, 0.92};
  std::ostringstream ratios;
  for (std::size_t i = 0; i < plan.ratios.size() && i < 4; ++i) {
    c.expect(std::abs(plan.ratios[i].ratio - table[i]) <= 0.005, "ratio off the table");
    ratios << (i ? "/" : "") << std::fixed << std::setprecision(3) << plan.ratios[i].ratio;
  }
  c.expect(plan.ratios.size() == 4, "ratio count");
  cfg.folds = 13;
  bool rejected = false;
  try {
    protocol::assemble_folds(m, cfg);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::InvalidProtocol;
  }
  c.expect(rejected, "13 folds accepted");
  return c.outcome("12 folds x 6 over 72 trees, ratios " + ratios.str());
}

// ---------------------------------------------------------------- AC8

template <typename T>
bool same_bytes(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

Outcome io_determinism() {
  Checker c;
  const auto dir = test::scratch_dir("acceptance_io");
  Rng rng(8008);
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = k == 0 ? 1000000 : rng.index(20000);
    auto cloud = test::random_cloud(n, rng.next(), 100.0);
    if (k % 3 == 1) {
      cloud.color.emplace(n);
      for (auto& rgb : *cloud.color) rgb = {static_cast<std::uint8_t>(rng.index(256)), static_cast<std::uint8_t>(rng.index(256)), 7};
    }
    const std::string id = "c" + std::to_string(k);
    io::write_standard(cloud, dir, id);
    const auto back = io::load_standard(dir, id);
    bool equal = same_bytes(cloud.points, back.points) && same_bytes(cloud.semantic, back.semantic) &&
                 same_bytes(cloud.instance, back.instance) && cloud.color.has_value() == back.color.has_value();
    if (cloud.color && back.color) equal &= same_bytes(*cloud.color, *back.color);
    c.expect(equal, "round trip differs for cloud " + std::to_string(k));
  }
  fs::remove_all(dir);

  const auto pdir = test::scratch_dir("acceptance_pipeline");
  const auto config = test::write_mini_pipeline(pdir, 8);
  std::ostringstream out, err;
  const int a = cli::run_cli({"run", config.string(), "--out", (pdir / "run_a").string()}, out, err);
  const int b = cli::run_cli({"run", config.string(), "--out", (pdir / "run_b").string()}, out, err);
  c.expect(a == 0 && b == 0, "pipeline failed: " + err.str().substr(0, 300));
  std::size_t files = 0;
  if (a == 0 && b == 0) {
    for (const auto& e : fs::recursive_directory_iterator(pdir / "run_a")) files += e.is_regular_file() ? 1 : 0;
    c.expect(test::tree_snapshot(pdir / "run_a") == test::tree_snapshot(pdir / "run_b"), "pipeline outputs differ");
  }
  return c.outcome("20 clouds incl. 1e6 points, pipeline x2 with " + std::to_string(files) + " files");
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "metric oracle suite", 60, metric_oracles},
      {2, "grouping round trip", 60, grouping_round_trip},
      {3, "grouping brute-force equivalence", 120, grouping_brute_force},
      {4, "deformation physics", 180, deformation_physics},
      {5, "VLS soundness", 120, vls_soundness},
      {6, "TreeGen invariants", 300, treegen_invariants},
      {7, "protocol arithmetic", 1, protocol_arithmetic},
      {8, "I/O determinism", 300, io_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& cr : criteria) {
    if (!only.empty() && !only.count(cr.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs < cr.budget_seconds;
    failed += pass ? 0 : 1;
    std::cout << "AC" << cr.id << ' ' << (pass ? "PASS" : "FAIL") << "  " << cr.name << "  [" << std::fixed
              << std::setprecision(2) << secs << " s / " << std::setprecision(0) << cr.budget_seconds << " s]  " << o.detail
              << (secs < cr.budget_seconds ? "" : "  (over time budget)") << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
