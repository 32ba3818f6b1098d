#include "forge/treegen/tree.hpp"

#include "forge/core/error.hpp"
#include "forge/io/binary.hpp"
#include "forge/io/ply.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>

namespace forge::treegen {

namespace fs = std::filesystem;

void TreeStats::canonicalize() {
  std::sort(branch_records.begin(), branch_records.end(), [](const BranchRecord& a, const BranchRecord& b) {
    return std::tie(a.order, a.insertion, a.azimuth, a.elevation, a.length, a.base_radius) <
           std::tie(b.order, b.insertion, b.azimuth, b.elevation, b.length, b.base_radius);
  });
  int max_order = 0;
  for (const auto& r : branch_records) max_order = std::max(max_order, r.order);
  branch_count_per_order.assign(static_cast<std::size_t>(max_order), 0);
  for (const auto& r : branch_records) {
    if (r.order >= 1) ++branch_count_per_order[static_cast<std::size_t>(r.order - 1)];
  }
}

void TreeStats::validate() const {
  const auto bad = [](const std::string& what) { fail(ErrorCode::InvalidStats, what); };
  if (!(trunk_height > 0.0) || !std::isfinite(trunk_height)) bad("trunk_height must be positive");
  if (!(trunk_base_radius > 0.0) || !std::isfinite(trunk_base_radius)) bad("trunk_base_radius must be positive");
  for (const auto& p : trunk_skeleton) {
    if (!p.allFinite()) bad("non-finite trunk skeleton node");
  }
  std::vector<int> counts;
  for (const auto& r : branch_records) {
    if (r.order < 1) bad("branch order must be >= 1");
    if (!(r.insertion >= 0.0 && r.insertion <= 1.0)) bad("insertion fraction outside [0,1]");
    if (!(r.base_radius > 0.0)) bad("branch radius must be positive");
    if (!(r.length > 0.0)) bad("branch length must be positive");
    if (!std::isfinite(r.azimuth) || !std::isfinite(r.elevation)) bad("non-finite branch angle");
    if (counts.size() < static_cast<std::size_t>(r.order)) counts.resize(static_cast<std::size_t>(r.order), 0);
    ++counts[static_cast<std::size_t>(r.order - 1)];
  }
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > 0 && counts[k - 1] == 0) bad("order-" + std::to_string(k + 1) + " branches without order-" + std::to_string(k));
  }
  if (counts != branch_count_per_order) bad("branch_count_per_order disagrees with branch_records");
}

nlohmann::ordered_json TreeStats::to_json() const {
  nlohmann::ordered_json j;
  j["trunk_height"] = trunk_height;
  j["trunk_base_radius"] = trunk_base_radius;
  nlohmann::ordered_json sk = nlohmann::ordered_json::array();
  for (const auto& p : trunk_skeleton) sk.push_back({p.x(), p.y(), p.z()});
  j["trunk_skeleton"] = sk;
  nlohmann::ordered_json recs = nlohmann::ordered_json::array();
  for (const auto& r : branch_records) {
    recs.push_back({{"insertion", r.insertion}, {"azimuth", r.azimuth}, {"elevation", r.elevation},
                    {"length", r.length}, {"base_radius", r.base_radius}, {"order", r.order}});
  }
  j["branch_records"] = recs;
  j["branch_count_per_order"] = branch_count_per_order;
  j["skipped_branches"] = skipped_branches;
  return j;
}

TreeStats TreeStats::from_json(const nlohmann::json& j) {
  TreeStats s;
  try {
    s.trunk_height = j.at("trunk_height").get<double>();
    s.trunk_base_radius = j.at("trunk_base_radius").get<double>();
    for (const auto& p : j.at("trunk_skeleton")) s.trunk_skeleton.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    for (const auto& r : j.at("branch_records")) {
      s.branch_records.push_back({r.at("insertion").get<double>(), r.at("azimuth").get<double>(),
                                  r.at("elevation").get<double>(), r.at("length").get<double>(),
                                  r.at("base_radius").get<double>(), r.at("order").get<int>()});
    }
    s.skipped_branches = j.value("skipped_branches", 0);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidStats, std::string("tree stats json: ") + e.what());
  }
  s.canonicalize();
  s.validate();
  return s;
}

std::vector<int> TreeModel::instance_parents() const {
  std::map<int, int> parents;
  for (const auto& s : skeleton) {
    auto [it, inserted] = parents.try_emplace(s.instance_id, -1);
    if (s.parent >= 0) {
      const int pi = skeleton[static_cast<std::size_t>(s.parent)].instance_id;
      if (pi != s.instance_id) it->second = pi;
    }
  }
  const int n = instance_count();
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  for (const auto& [inst, parent] : parents) {
    if (inst >= 0 && inst < n) out[static_cast<std::size_t>(inst)] = parent;
  }
  return out;
}

int TreeModel::instance_count() const {
  int n = 0;
  for (const auto& s : skeleton) n = std::max(n, s.instance_id + 1);
  for (const auto& f : mesh.faces) n = std::max(n, f.instance_id + 1);
  return n;
}

double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  // closest points of two segments
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  constexpr double eps = 1e-18;
  double s = 0.0;
  double t = 0.0;
  if (a <= eps && e <= eps) return r.norm();
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > eps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

bool capsules_collide(const Segment& a, const Segment& b, double tolerance) {
  const double reach = a.capsule_radius() + b.capsule_radius() - tolerance;
  if (reach <= 0.0) return false;
  // cheap reject on axis-aligned bounds
  for (int k = 0; k < 3; ++k) {
    const double alo = std::min(a.start[k], a.end[k]);
    const double ahi = std::max(a.start[k], a.end[k]);
    const double blo = std::min(b.start[k], b.end[k]);
    const double bhi = std::max(b.start[k], b.end[k]);
    if (alo - reach > bhi || blo - reach > ahi) return false;
  }
  return segment_distance(a.start, a.end, b.start, b.end) < reach;
}

std::vector<CollisionPair> find_collisions(const TreeModel& model, double tolerance) {
  const auto parents = model.instance_parents();
  const auto related = [&](int x, int y) {
    if (x == y) return true;
    const auto px = x >= 0 && static_cast<std::size_t>(x) < parents.size() ? parents[static_cast<std::size_t>(x)] : -1;
    const auto py = y >= 0 && static_cast<std::size_t>(y) < parents.size() ? parents[static_cast<std::size_t>(y)] : -1;
    return px == y || py == x;
  };
  std::vector<CollisionPair> out;
  const auto& sk = model.skeleton;
  for (std::size_t i = 0; i < sk.size(); ++i) {
    for (std::size_t j = i + 1; j < sk.size(); ++j) {
      if (related(sk[i].instance_id, sk[j].instance_id)) continue;
      if (capsules_collide(sk[i], sk[j], tolerance)) out.push_back({i, j});
    }
  }
  return out;
}

bool is_tapered(const TreeModel& model) {
  for (const auto& s : model.skeleton) {
    if (s.end_radius > s.start_radius) return false;
    if (s.parent >= 0 && s.start_radius > model.skeleton[static_cast<std::size_t>(s.parent)].end_radius) return false;
  }
  return true;
}

bool is_acyclic_single_root(const TreeModel& model) {
  const auto& sk = model.skeleton;
  if (sk.empty()) return false;
  int roots = 0;
  for (const auto& s : sk) {
    if (s.parent < 0) ++roots;
    else if (static_cast<std::size_t>(s.parent) >= sk.size()) return false;
  }
  if (roots != 1) return false;
  // every segment must reach the root within sk.size() hops
  for (std::size_t i = 0; i < sk.size(); ++i) {
    int cur = static_cast<int>(i);
    std::size_t hops = 0;
    while (sk[static_cast<std::size_t>(cur)].parent >= 0) {
      cur = sk[static_cast<std::size_t>(cur)].parent;
      if (++hops > sk.size()) return false;
    }
  }
  return true;
}

void write_mesh_ply(const Mesh& mesh, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "element face " << mesh.faces.size() << "\n";
  out << "property list uchar int vertex_indices\nproperty int organ_id\nproperty int instance_id\nend_header\n";
  for (const auto& v : mesh.vertices) {
    io::write_le(out, v.x());
    io::write_le(out, v.y());
    io::write_le(out, v.z());
  }
  for (const auto& f : mesh.faces) {
    io::write_le(out, std::uint8_t{3});
    for (auto idx : f.v) io::write_le(out, static_cast<std::int32_t>(idx));
    io::write_le(out, static_cast<std::int32_t>(f.organ_id));
    io::write_le(out, static_cast<std::int32_t>(f.instance_id));
  }
}

Mesh read_mesh_ply(const fs::path& path) {
  const io::PlyFile ply = io::read_ply(path);
  const io::PlyElement* vertex = ply.element("vertex");
  const io::PlyElement* face = ply.element("face");
  if (!vertex || !face) fail(ErrorCode::SchemaError, path.string() + ": mesh PLY needs vertex and face elements");
  const int x = vertex->find("x");
  const int y = vertex->find("y");
  const int z = vertex->find("z");
  if (x < 0 || y < 0 || z < 0) fail(ErrorCode::SchemaError, path.string() + ": missing x/y/z");
  int idx = face->find("vertex_indices");
  if (idx < 0) idx = face->find("vertex_index");
  const int organ = face->find("organ_id");
  const int inst = face->find("instance_id");
  if (idx < 0 || organ < 0 || inst < 0) fail(ErrorCode::SchemaError, path.string() + ": face needs vertex_indices, organ_id, instance_id");

  Mesh mesh;
  mesh.vertices.reserve(vertex->count);
  for (std::size_t i = 0; i < vertex->count; ++i) {
    mesh.vertices.emplace_back(static_cast<float>(vertex->scalars[static_cast<std::size_t>(x)][i]),
                               static_cast<float>(vertex->scalars[static_cast<std::size_t>(y)][i]),
                               static_cast<float>(vertex->scalars[static_cast<std::size_t>(z)][i]));
  }
  for (std::size_t i = 0; i < face->count; ++i) {
    const auto& list = face->lists[static_cast<std::size_t>(idx)][i];
    const int o = static_cast<int>(face->scalars[static_cast<std::size_t>(organ)][i]);
    const int n = static_cast<int>(face->scalars[static_cast<std::size_t>(inst)][i]);
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k] < 0 || static_cast<std::size_t>(list[k]) >= mesh.vertices.size()) {
        fail(ErrorCode::ParseError, path.string() + ": face " + std::to_string(i) + " references a missing vertex");
      }
    }
    // fan-triangulate polygons
    for (std::size_t k = 1; k + 1 < list.size(); ++k) {
      mesh.faces.push_back({{static_cast<std::uint32_t>(list[0]), static_cast<std::uint32_t>(list[k]),
                             static_cast<std::uint32_t>(list[k + 1])},
                            o, n});
    }
  }
  return mesh;
}

nlohmann::ordered_json skeleton_to_json(const std::vector<Segment>& skeleton) {
  std::vector<std::vector<int>> children(skeleton.size());
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    if (skeleton[i].parent >= 0) children[static_cast<std::size_t>(skeleton[i].parent)].push_back(static_cast<int>(i));
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    const auto& s = skeleton[i];
    arr.push_back({{"id", i},
                   {"parent", s.parent},
                   {"children", children[i]},
                   {"start", {s.start.x(), s.start.y(), s.start.z()}},
                   {"end", {s.end.x(), s.end.y(), s.end.z()}},
                   {"start_radius", s.start_radius},
                   {"end_radius", s.end_radius},
                   {"organ_id", s.organ_id},
                   {"instance_id", s.instance_id},
                   {"order", s.order}});
  }
  nlohmann::ordered_json j;
  j["segments"] = arr;
  return j;
}

std::vector<Segment> skeleton_from_json(const nlohmann::json& j) {
  std::vector<Segment> out;
  try {
    for (const auto& s : j.at("segments")) {
      Segment seg;
      const auto& a = s.at("start");
      const auto& b = s.at("end");
      seg.start = Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
      seg.end = Vec3(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>());
      seg.start_radius = s.at("start_radius").get<double>();
      seg.end_radius = s.at("end_radius").get<double>();
      seg.organ_id = s.at("organ_id").get<int>();
      seg.instance_id = s.at("instance_id").get<int>();
      seg.order = s.value("order", 0);
      seg.parent = s.at("parent").get<int>();
      out.push_back(seg);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("skeleton json: ") + e.what());
  }
  return out;
}

fs::path skeleton_path_for(const fs::path& ply_path) {
  fs::path p = ply_path;
  p.replace_extension(".skeleton.json");
  return p;
}

void save_model(const TreeModel& model, const fs::path& ply_path) {
  write_mesh_ply(model.mesh, ply_path);
  std::ofstream out(skeleton_path_for(ply_path), std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write skeleton for " + ply_path.string());
  out << skeleton_to_json(model.skeleton).dump(1) << "\n";
}

TreeModel load_model(const fs::path& ply_path) {
  TreeModel model;
  model.mesh = read_mesh_ply(ply_path);
  const fs::path sk = skeleton_path_for(ply_path);
  if (fs::exists(sk)) {
    std::ifstream in(sk);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::SchemaError, sk.string() + ": " + e.what());
    }
    model.skeleton = skeleton_from_json(j);
  }
  return model;
}

}  // namespace forge::treegen
