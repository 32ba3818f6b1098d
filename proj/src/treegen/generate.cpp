#include "forge/core/error.hpp"
#include "forge/core/rng.hpp"
#include "forge/treegen/treegen.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>

namespace forge::treegen {

namespace {

constexpr double kPi = std::numbers::pi;

double lerp_clamped(double x, double y, double t) {
  const double v = x + t * (y - x);
  return std::clamp(v, std::min(x, y), std::max(x, y));
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}

double lerp_angle(double x, double y, double t) {
  if (x == y) return x;
  return wrap_angle(x + t * wrap_angle(y - x));
}

BranchRecord lerp_record(const BranchRecord& a, const BranchRecord& b, double t) {
  BranchRecord r;
  r.order = a.order;
  r.insertion = lerp_clamped(a.insertion, b.insertion, t);
  r.azimuth = lerp_angle(a.azimuth, b.azimuth, t);
  r.elevation = lerp_clamped(a.elevation, b.elevation, t);
  r.length = lerp_clamped(a.length, b.length, t);
  r.base_radius = lerp_clamped(a.base_radius, b.base_radius, t);
  return r;
}

BranchRecord mean_record(const std::vector<BranchRecord>& records) {
  BranchRecord m;
  m.order = records.front().order;
  double s = 0.0;
  double c = 0.0;
  for (const auto& r : records) {
    m.insertion += r.insertion;
    m.elevation += r.elevation;
    m.length += r.length;
    m.base_radius += r.base_radius;
    s += std::sin(r.azimuth);
    c += std::cos(r.azimuth);
  }
  const auto n = static_cast<double>(records.size());
  m.insertion /= n;
  m.elevation /= n;
  m.length /= n;
  m.base_radius /= n;
  m.azimuth = std::atan2(s, c);
  return m;
}

std::vector<Vec3> resample_polyline(const std::vector<Vec3>& nodes, std::size_t count) {
  std::vector<double> arc(nodes.size(), 0.0);
  for (std::size_t i = 1; i < nodes.size(); ++i) arc[i] = arc[i - 1] + (nodes[i] - nodes[i - 1]).norm();
  const double total = arc.back();
  std::vector<Vec3> out;
  out.reserve(count);
  std::size_t seg = 1;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(count - 1);
    while (seg + 1 < nodes.size() && arc[seg] < s) ++seg;
    const double len = arc[seg] - arc[seg - 1];
    const double u = len > 0.0 ? std::clamp((s - arc[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back(nodes[seg - 1] + u * (nodes[seg] - nodes[seg - 1]));
  }
  return out;
}

/// Skeleton relative to its base node, or a vertical line when degenerate.
std::vector<Vec3> normalized_skeleton(const TreeStats& s) {
  if (s.trunk_skeleton.size() < 2) return {Vec3::Zero(), Vec3(0, 0, s.trunk_height)};
  std::vector<Vec3> out;
  for (const auto& p : s.trunk_skeleton) out.push_back(p - s.trunk_skeleton.front());
  return out;
}

}  // namespace

TreeStats interpolate_stats(const TreeStats& a, const TreeStats& b, double t, std::uint64_t seed) {
  a.validate();
  b.validate();
  t = std::clamp(t, 0.0, 1.0);
  if (a == b) return a;

  TreeStats out;
  out.trunk_height = lerp_clamped(a.trunk_height, b.trunk_height, t);
  out.trunk_base_radius = lerp_clamped(a.trunk_base_radius, b.trunk_base_radius, t);

  const auto sa = normalized_skeleton(a);
  const auto sb = normalized_skeleton(b);
  const std::size_t nodes = std::max({sa.size(), sb.size(), std::size_t{2}});
  const auto ra = resample_polyline(sa, nodes);
  const auto rb = resample_polyline(sb, nodes);
  for (std::size_t i = 0; i < nodes; ++i) out.trunk_skeleton.push_back(ra[i] + t * (rb[i] - ra[i]));

  Rng rng(derive_seed(seed, hash_name("interpolate_stats")));
  const int max_order = std::max(a.max_order(), b.max_order());
  bool parent_order_present = true;
  for (int order = 1; order <= max_order; ++order) {
    std::vector<BranchRecord> ra_k;
    std::vector<BranchRecord> rb_k;
    for (const auto& r : a.branch_records) {
      if (r.order == order) ra_k.push_back(r);
    }
    for (const auto& r : b.branch_records) {
      if (r.order == order) rb_k.push_back(r);
    }
    const double blended = static_cast<double>(ra_k.size()) +
                           t * (static_cast<double>(rb_k.size()) - static_cast<double>(ra_k.size()));
    std::size_t count = parent_order_present ? static_cast<std::size_t>(std::lround(blended)) : 0;
    count = std::min(count, std::max(ra_k.size(), rb_k.size()));
    parent_order_present = count > 0;

    rng.shuffle(std::span<BranchRecord>(ra_k));
    rng.shuffle(std::span<BranchRecord>(rb_k));
    const std::optional<BranchRecord> mean_a = ra_k.empty() ? std::nullopt : std::optional(mean_record(ra_k));
    const std::optional<BranchRecord> mean_b = rb_k.empty() ? std::nullopt : std::optional(mean_record(rb_k));
    for (std::size_t i = 0; i < count; ++i) {
      const bool has_a = i < ra_k.size();
      const bool has_b = i < rb_k.size();
      if (has_a && has_b) {
        out.branch_records.push_back(lerp_record(ra_k[i], rb_k[i], t));
      } else if (has_a) {
        out.branch_records.push_back(mean_b ? lerp_record(ra_k[i], *mean_b, t) : ra_k[i]);
      } else {
        out.branch_records.push_back(mean_a ? lerp_record(*mean_a, rb_k[i], t) : rb_k[i]);
      }
    }
  }
  out.canonicalize();
  out.validate();
  return out;
}

namespace {

struct Organ {
  int instance = 0;
  int order = 0;
  std::vector<std::size_t> segments;
  double length = 0.0;
  double base_radius = 0.0;
};

struct Attachment {
  Vec3 axis_point;
  Vec3 axis_dir;
  double radius;
  std::size_t segment;
};

Vec3 any_perpendicular(const Vec3& a) {
  const Vec3 helper = std::abs(a.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  return a.cross(helper).normalized();
}

class TreeBuilder {
 public:
  TreeBuilder(const TreeGenConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {}

  void build_trunk(const TreeStats& stats) {
    auto nodes = normalized_skeleton(stats);
    const double dz = nodes.back().z() - nodes.front().z();
    if (dz > 0.0) {
      for (auto& p : nodes) p.z() *= stats.trunk_height / dz;
    } else {
      nodes = {Vec3::Zero(), Vec3(0, 0, stats.trunk_height)};
    }
    // subdivide so the taper is resolved by at least min_trunk_segments pieces
    std::vector<double> arc(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i) arc[i] = arc[i - 1] + (nodes[i] - nodes[i - 1]).norm();
    const double total = arc.back();
    const double target = total / std::max(1, cfg_.min_trunk_segments);
    std::vector<Vec3> fine{nodes.front()};
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      const double len = arc[i] - arc[i - 1];
      const int pieces = std::max(1, static_cast<int>(std::ceil(len / target - 1e-9)));
      for (int k = 1; k <= pieces; ++k) fine.push_back(nodes[i - 1] + (nodes[i] - nodes[i - 1]) * (double(k) / pieces));
    }
    Organ trunk;
    trunk.instance = 0;
    trunk.order = 0;
    trunk.length = total;
    trunk.base_radius = stats.trunk_base_radius;
    double s = 0.0;
    for (std::size_t i = 1; i < fine.size(); ++i) {
      const double len = (fine[i] - fine[i - 1]).norm();
      Segment seg;
      seg.start = fine[i - 1];
      seg.end = fine[i];
      seg.start_radius = taper(stats.trunk_base_radius, s / total);
      s += len;
      seg.end_radius = taper(stats.trunk_base_radius, std::min(1.0, s / total));
      seg.organ_id = cfg_.trunk_class;
      seg.instance_id = 0;
      seg.order = 0;
      seg.parent = i == 1 ? -1 : static_cast<int>(model_.skeleton.size() - 1);
      trunk.segments.push_back(model_.skeleton.size());
      model_.skeleton.push_back(seg);
    }
    organs_.push_back(trunk);
  }

  /// Point on an organ at a fraction of its length (by arc for branches, by
  /// height for the trunk).
  Attachment attach(const Organ& organ, double fraction) const {
    const auto& segs = organ.segments;
    if (organ.order == 0) {
      const double z0 = model_.skeleton[segs.front()].start.z();
      const double z1 = model_.skeleton[segs.back()].end.z();
      const double z = z0 + fraction * (z1 - z0);
      for (std::size_t k = 0; k < segs.size(); ++k) {
        const Segment& sg = model_.skeleton[segs[k]];
        if (z <= sg.end.z() || k + 1 == segs.size()) {
          const double dz = sg.end.z() - sg.start.z();
          const double u = dz > 0.0 ? std::clamp((z - sg.start.z()) / dz, 0.0, 1.0) : 0.0;
          return at_segment(segs[k], u);
        }
      }
    }
    double remaining = fraction * organ.length;
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const Segment& sg = model_.skeleton[segs[k]];
      const double len = (sg.end - sg.start).norm();
      if (remaining <= len || k + 1 == segs.size()) {
        return at_segment(segs[k], len > 0.0 ? std::clamp(remaining / len, 0.0, 1.0) : 0.0);
      }
      remaining -= len;
    }
    return at_segment(segs.back(), 1.0);
  }

  /// Tries to add a branch; returns false when it collides.
  bool try_branch(const Organ& parent, double fraction, const Vec3& direction, double length, double radius,
                  int order, std::uint64_t shape_seed) {
    const Attachment at = attach(parent, fraction);
    const Segment& parent_seg = model_.skeleton[at.segment];
    radius = std::min(radius, parent_seg.end_radius);
    if (!(radius > 0.0) || !(length > 0.0)) return false;

    Vec3 outward = direction - direction.dot(at.axis_dir) * at.axis_dir;
    if (outward.norm() < 1e-9) outward = any_perpendicular(at.axis_dir);
    outward.normalize();
    Vec3 p = at.axis_point + at.radius * outward;

    Rng shape(shape_seed);
    const int pieces = std::max(1, cfg_.branch_segments);
    const double piece_len = length / pieces;
    Vec3 d = direction.normalized();
    std::vector<Segment> candidate;
    const int instance = next_instance_;
    for (int k = 0; k < pieces; ++k) {
      if (k > 0) {
        const Vec3 jitter(shape.uniform(-cfg_.bend, cfg_.bend), shape.uniform(-cfg_.bend, cfg_.bend),
                          shape.uniform(-cfg_.bend, cfg_.bend));
        d = (d + jitter).normalized();
      }
      Segment seg;
      seg.start = p;
      seg.end = p + piece_len * d;
      seg.start_radius = taper(radius, double(k) / pieces);
      seg.end_radius = taper(radius, double(k + 1) / pieces);
      seg.organ_id = cfg_.branch_class;
      seg.instance_id = instance;
      seg.order = order;
      p = seg.end;
      candidate.push_back(seg);
    }

    for (const auto& seg : candidate) {
      for (const auto& other : model_.skeleton) {
        if (other.instance_id == parent.instance) continue;
        if (capsules_collide(seg, other, cfg_.collision_tolerance)) return false;
      }
    }

    Organ organ;
    organ.instance = instance;
    organ.order = order;
    organ.length = length;
    organ.base_radius = radius;
    for (std::size_t k = 0; k < candidate.size(); ++k) {
      candidate[k].parent = k == 0 ? static_cast<int>(at.segment) : static_cast<int>(model_.skeleton.size() - 1);
      organ.segments.push_back(model_.skeleton.size());
      model_.skeleton.push_back(candidate[k]);
    }
    organs_.push_back(std::move(organ));
    ++next_instance_;
    return true;
  }

  /// Places one branch with re-sampling on collision; dropped after the budget.
  void place(std::size_t parent_index, double fraction, const Vec3& direction, double length, double radius, int order,
             bool relative_azimuth) {
    double f = fraction;
    Vec3 dir = direction;
    for (int attempt = 0; attempt <= cfg_.retry_budget; ++attempt) {
      const std::uint64_t shape_seed = rng_.next();
      const Organ parent = organs_[parent_index];
      if (try_branch(parent, f, dir, length, radius, order, shape_seed)) return;
      f = std::clamp(fraction + rng_.uniform(-cfg_.insertion_jitter, cfg_.insertion_jitter), 0.0, 1.0);
      const double az = rng_.uniform(-kPi, kPi);
      if (relative_azimuth) {
        dir = rotate_about(direction, attach(parent, f).axis_dir, az);
      } else {
        const double el = std::asin(std::clamp(direction.normalized().z(), -1.0, 1.0));
        dir = Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      }
    }
  }

  void grow(const TreeStats& stats, int max_order) {
    for (const auto& r : stats.branch_records) {
      if (r.order != 1) continue;
      place(0, r.insertion, direction_of(r), r.length, r.base_radius, 1, false);
    }
    for (int order = 2; order <= max_order; ++order) {
      std::vector<std::size_t> parents;
      for (std::size_t i = 0; i < organs_.size(); ++i) {
        if (organs_[i].order == order - 1) parents.push_back(i);
      }
      if (parents.empty()) break;
      bool measured = false;
      for (const auto& r : stats.branch_records) {
        if (r.order != order) continue;
        measured = true;
        const std::size_t pi = parents[static_cast<std::size_t>(rng_.index(parents.size()))];
        const Organ& parent = organs_[pi];
        const double length = std::min(r.length, parent.length * cfg_.length_scale);
        const double radius = std::min(r.base_radius, parent.base_radius * cfg_.radius_scale);
        place(pi, r.insertion, direction_of(r), length, radius, order, false);
      }
      if (measured) continue;
      for (std::size_t pi : parents) {
        for (int c = 0; c < cfg_.children_per_branch; ++c) {
          const Organ parent = organs_[pi];
          const double fraction = rng_.uniform(0.25, 0.9);
          const Vec3 axis = attach(parent, fraction).axis_dir;
          const double spread = rng_.uniform(0.5, 1.0);
          const Vec3 tilted = rotate_about(axis, any_perpendicular(axis), spread);
          const Vec3 dir = rotate_about(tilted, axis, rng_.uniform(-kPi, kPi));
          place(pi, fraction, dir, parent.length * cfg_.length_scale, parent.base_radius * cfg_.radius_scale, order,
                true);
        }
      }
    }
  }

  void build_mesh() {
    const int n = std::max(3, cfg_.radial_segments);
    std::vector<bool> is_last(model_.skeleton.size(), true);
    for (const auto& s : model_.skeleton) {
      if (s.parent >= 0 && model_.skeleton[static_cast<std::size_t>(s.parent)].instance_id == s.instance_id) {
        is_last[static_cast<std::size_t>(s.parent)] = false;
      }
    }
    auto& mesh = model_.mesh;
    for (std::size_t si = 0; si < model_.skeleton.size(); ++si) {
      const Segment& s = model_.skeleton[si];
      const Vec3 axis = (s.end - s.start).normalized();
      const Vec3 u = any_perpendicular(axis);
      const Vec3 v = axis.cross(u);
      const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
      for (int ring = 0; ring < 2; ++ring) {
        const Vec3& c = ring == 0 ? s.start : s.end;
        const double r = ring == 0 ? s.start_radius : s.end_radius;
        for (int k = 0; k < n; ++k) {
          const double th = 2.0 * kPi * k / n;
          mesh.vertices.push_back((c + r * (std::cos(th) * u + std::sin(th) * v)).cast<float>());
        }
      }
      const auto un = static_cast<std::uint32_t>(n);
      for (std::uint32_t k = 0; k < un; ++k) {
        const std::uint32_t k1 = (k + 1) % un;
        mesh.faces.push_back({{base + k, base + k1, base + un + k1}, s.organ_id, s.instance_id});
        mesh.faces.push_back({{base + k, base + un + k1, base + un + k}, s.organ_id, s.instance_id});
      }
      const auto cap = [&](const Vec3& center, std::uint32_t ring_base, bool flip) {
        const auto ci = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(center.cast<float>());
        for (std::uint32_t k = 0; k < un; ++k) {
          const std::uint32_t k1 = (k + 1) % un;
          if (flip) mesh.faces.push_back({{ci, ring_base + k1, ring_base + k}, s.organ_id, s.instance_id});
          else mesh.faces.push_back({{ci, ring_base + k, ring_base + k1}, s.organ_id, s.instance_id});
        }
      };
      if (s.parent < 0) cap(s.start, base, true);
      if (is_last[si]) cap(s.end, base + un, false);
    }
  }

  TreeModel take() { return std::move(model_); }

 private:
  double taper(double base_radius, double fraction) const {
    return base_radius * (1.0 - (1.0 - cfg_.tip_radius_ratio) * fraction);
  }

  Attachment at_segment(std::size_t index, double u) const {
    const Segment& sg = model_.skeleton[index];
    const Vec3 d = sg.end - sg.start;
    const Vec3 dir = d.norm() > 0.0 ? Vec3(d.normalized()) : Vec3(Vec3::UnitZ());
    return {sg.start + u * d, dir, sg.start_radius + u * (sg.end_radius - sg.start_radius), index};
  }

  static Vec3 direction_of(const BranchRecord& r) {
    return {std::cos(r.elevation) * std::cos(r.azimuth), std::cos(r.elevation) * std::sin(r.azimuth),
            std::sin(r.elevation)};
  }

  static Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()) * v;
  }

  const TreeGenConfig& cfg_;
  Rng rng_;
  TreeModel model_;
  std::vector<Organ> organs_;
  int next_instance_ = 1;
};

}  // namespace

TreeModel generate_tree(const TreeStats& stats, std::uint64_t seed, int max_order, const TreeGenConfig& config) {
  stats.validate();
  if (max_order < 1) fail(ErrorCode::InvalidArgument, "max_order must be >= 1");
  TreeBuilder builder(config, derive_seed(seed, hash_name("generate_tree")));
  builder.build_trunk(stats);
  builder.grow(stats, max_order);
  builder.build_mesh();
  return builder.take();
}

std::vector<GeneratedTree> generate_population(std::span<const TreeStats> bases, std::size_t n, std::uint64_t seed,
                                               int max_order, const TreeGenConfig& config, Exec exec) {
  if (bases.empty()) fail(ErrorCode::InvalidArgument, "need at least one base tree");
  if (n < 1) fail(ErrorCode::InvalidArgument, "population size must be >= 1");
  for (const auto& b : bases) b.validate();

  std::vector<GeneratedTree> out(n);
  std::vector<std::exception_ptr> errors(n);
  const auto make = [&](std::size_t i) {
    try {
      Rng rng(derive_seed(seed, hash_name("population"), i));
      GeneratedTree& g = out[i];
      g.base_a = static_cast<std::size_t>(rng.index(bases.size()));
      g.base_b = static_cast<std::size_t>(rng.index(bases.size()));
      g.t = rng.uniform();
      g.stats = interpolate_stats(bases[g.base_a], bases[g.base_b], g.t, rng.next());
      g.model = generate_tree(g.stats, rng.next(), max_order, config);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) make(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) make(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace forge::treegen
