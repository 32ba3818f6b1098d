#include "forge/core/error.hpp"
#include "forge/treegen/treegen.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace forge::treegen {

namespace {

/// Algebraic (Kasa) circle fit in XY; falls back to the mean radial distance.
double fit_radius(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  if (pts.size() >= 3) {
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (const auto& p : pts) {
      const double x = p.x() - c.x();
      const double y = p.y() - c.y();
      const Eigen::Vector3d row(x, y, 1.0);
      A += row * row.transpose();
      rhs -= row * (x * x + y * y);
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
    if (lu.rank() == 3) {
      const Eigen::Vector3d s = lu.solve(rhs);
      const double r2 = 0.25 * (s(0) * s(0) + s(1) * s(1)) - s(2);
      if (r2 > 0.0 && std::isfinite(r2)) return std::sqrt(r2);
    }
  }
  double sum = 0.0;
  for (const auto& p : pts) sum += std::hypot(p.x() - c.x(), p.y() - c.y());
  return sum / static_cast<double>(pts.size());
}

struct TrunkAxis {
  std::vector<Vec3> nodes;  // ascending z

  /// Axis point at height z (clamped to the polyline).
  Vec3 at(double z) const {
    if (z <= nodes.front().z()) return nodes.front();
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (z <= nodes[i].z()) {
        const double dz = nodes[i].z() - nodes[i - 1].z();
        const double u = dz > 0.0 ? (z - nodes[i - 1].z()) / dz : 0.0;
        return nodes[i - 1] + u * (nodes[i] - nodes[i - 1]);
      }
    }
    return nodes.back();
  }
};

struct Axis {
  Vec3 base;
  Vec3 dir;
  double length;
  double radius;
};

}  // namespace

TreeStats extract_stats(const LabeledCloud& base, const ExtractConfig& config) {
  validate(base);
  std::vector<Vec3> trunk;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base.semantic[i] == config.trunk_class) trunk.push_back(base.points[i].cast<double>());
  }
  if (trunk.empty()) fail(ErrorCode::MissingOrgan, "no trunk points (class " + std::to_string(config.trunk_class) + ")");

  double zmin = trunk.front().z();
  double zmax = zmin;
  for (const auto& p : trunk) {
    zmin = std::min(zmin, p.z());
    zmax = std::max(zmax, p.z());
  }
  const double height = zmax - zmin;
  if (!(height > 0.0)) fail(ErrorCode::MissingOrgan, "trunk points have no vertical extent");

  TreeStats stats;
  stats.trunk_height = height;

  const double bin = config.bin_size > 0.0 ? config.bin_size : height / 10.0;
  const auto n_bins = static_cast<std::size_t>(std::max(1.0, std::ceil(height / bin)));
  std::vector<Vec3> sums(n_bins, Vec3::Zero());
  std::vector<std::size_t> counts(n_bins, 0);
  for (const auto& p : trunk) {
    const auto b = std::min(n_bins - 1, static_cast<std::size_t>((p.z() - zmin) / bin));
    sums[b] += p;
    ++counts[b];
  }
  std::vector<Vec3> centroids;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b] > 0) centroids.push_back(sums[b] / static_cast<double>(counts[b]));
  }
  stats.trunk_skeleton.emplace_back(centroids.front().x(), centroids.front().y(), zmin);
  for (const auto& c : centroids) {
    if (c.z() > stats.trunk_skeleton.back().z()) stats.trunk_skeleton.push_back(c);
  }
  if (zmax > stats.trunk_skeleton.back().z()) stats.trunk_skeleton.emplace_back(centroids.back().x(), centroids.back().y(), zmax);

  std::vector<Vec3> base_ring;
  const double base_band = std::max(bin, 0.1 * height);
  for (const auto& p : trunk) {
    if (p.z() <= zmin + base_band) base_ring.push_back(p);
  }
  stats.trunk_base_radius = fit_radius(base_ring);
  if (!(stats.trunk_base_radius > 0.0)) stats.trunk_base_radius = 1e-3;

  const TrunkAxis trunk_axis{stats.trunk_skeleton};
  const auto trunk_radius_at = [&](double z) {
    const double f = std::clamp((z - zmin) / height, 0.0, 1.0);
    return stats.trunk_base_radius * (1.0 - 0.9 * f);
  };

  std::map<int, std::vector<Vec3>> branches;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base.semantic[i] == config.branch_class && base.instance[i] >= 0) {
      branches[base.instance[i]].push_back(base.points[i].cast<double>());
    }
  }

  std::vector<Axis> attached;
  std::vector<Axis> detached;
  for (const auto& [id, pts] : branches) {
    if (pts.size() < config.min_branch_points) {
      ++stats.skipped_branches;
      continue;
    }
    Vec3 mean = Vec3::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Vec3 dir = eig.eigenvectors().col(2).normalized();
    double smin = 0.0;
    double smax = 0.0;
    for (const auto& p : pts) {
      const double s = (p - mean).dot(dir);
      smin = std::min(smin, s);
      smax = std::max(smax, s);
    }
    Vec3 a = mean + smin * dir;
    Vec3 b = mean + smax * dir;
    const auto trunk_gap = [&](const Vec3& p) {
      const Vec3 axis = trunk_axis.at(p.z());
      return std::hypot(p.x() - axis.x(), p.y() - axis.y());
    };
    if (trunk_gap(b) < trunk_gap(a)) {
      std::swap(a, b);
      dir = -dir;
    }
    const double length = smax - smin;
    if (!(length > 0.0)) {
      ++stats.skipped_branches;
      continue;
    }
    // radius from the basal quarter of the branch
    double rsum = 0.0;
    std::size_t rcount = 0;
    for (const auto& p : pts) {
      const double s = (p - a).dot(dir);
      if (s <= 0.25 * length) {
        rsum += ((p - a) - s * dir).norm();
        ++rcount;
      }
    }
    if (rcount < 3) {
      rsum = 0.0;
      rcount = 0;
      for (const auto& p : pts) {
        rsum += ((p - a) - (p - a).dot(dir) * dir).norm();
        ++rcount;
      }
    }
    const double radius = std::max(1e-4, rsum / static_cast<double>(rcount));
    const Axis axis{a, dir, length, radius};
    if (trunk_gap(a) <= trunk_radius_at(a.z()) + config.attach_margin + 2.0 * radius) {
      attached.push_back(axis);
    } else {
      detached.push_back(axis);
    }
  }

  const auto record = [](const Axis& ax, double insertion, int order) {
    BranchRecord r;
    r.insertion = std::clamp(insertion, 0.0, 1.0);
    r.azimuth = std::atan2(ax.dir.y(), ax.dir.x());
    r.elevation = std::asin(std::clamp(ax.dir.z(), -1.0, 1.0));
    r.length = ax.length;
    r.base_radius = ax.radius;
    r.order = order;
    return r;
  };

  for (const auto& ax : attached) stats.branch_records.push_back(record(ax, (ax.base.z() - zmin) / height, 1));
  for (const auto& ax : detached) {
    if (attached.empty()) {
      stats.branch_records.push_back(record(ax, (ax.base.z() - zmin) / height, 1));
      continue;
    }
    // nearest first-order branch becomes the parent
    double best = std::numeric_limits<double>::infinity();
    double insertion = 0.0;
    for (const auto& parent : attached) {
      const double s = std::clamp((ax.base - parent.base).dot(parent.dir), 0.0, parent.length);
      const double d = (parent.base + s * parent.dir - ax.base).norm();
      if (d < best) {
        best = d;
        insertion = s / parent.length;
      }
    }
    stats.branch_records.push_back(record(ax, insertion, 2));
  }
  stats.canonicalize();
  stats.validate();
  return stats;
}

}  // namespace forge::treegen
