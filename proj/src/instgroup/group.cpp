#include "forge/core/error.hpp"
#include "forge/core/union_find.hpp"
#include "forge/instgroup/instgroup.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

namespace forge::instgroup {

namespace {

using CellKey = std::array<std::int64_t, 3>;

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return static_cast<std::size_t>(static_cast<std::uint64_t>(k[0]) * 73856093ull ^
                                    static_cast<std::uint64_t>(k[1]) * 19349663ull ^
                                    static_cast<std::uint64_t>(k[2]) * 83492791ull);
  }
};

bool any_within(std::span<const Vec3> pts, const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                double r2) {
  for (auto i : a) {
    for (auto j : b) {
      if ((pts[i] - pts[j]).squaredNorm() <= r2) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::uint32_t> radius_components(std::span<const Vec3> points, double radius, Exec exec) {
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "grouping radius must be positive");
  const std::size_t n = points.size();
  if (n == 0) return {};
  for (const auto& p : points) {
    if (!p.allFinite()) fail(ErrorCode::InvalidGeometry, "non-finite shifted coordinate");
  }
  // Cells small enough that any two members are within the radius; linked
  // cells are then found by one exact pair test, at most two cells apart.
  const double cell = radius / std::sqrt(3.0) * (1.0 - 1e-9);
  const double r2 = radius * radius;
  std::unordered_map<CellKey, std::uint32_t, CellKeyHash> index;
  std::vector<CellKey> keys;
  std::vector<std::vector<std::uint32_t>> members;
  std::vector<std::uint32_t> cell_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CellKey k{static_cast<std::int64_t>(std::floor(points[i].x() / cell)),
                    static_cast<std::int64_t>(std::floor(points[i].y() / cell)),
                    static_cast<std::int64_t>(std::floor(points[i].z() / cell))};
    auto [it, fresh] = index.try_emplace(k, static_cast<std::uint32_t>(keys.size()));
    if (fresh) {
      keys.push_back(k);
      members.emplace_back();
    }
    members[it->second].push_back(static_cast<std::uint32_t>(i));
    cell_of[i] = it->second;
  }

  const std::size_t nc = keys.size();
  std::vector<std::vector<std::uint32_t>> links(nc);
  const auto scan_cell = [&](std::size_t c) {
    const auto& k = keys[c];
    for (std::int64_t dx = -2; dx <= 2; ++dx) {
      for (std::int64_t dy = -2; dy <= 2; ++dy) {
        for (std::int64_t dz = -2; dz <= 2; ++dz) {
          // each unordered pair once
          if (std::array{dx, dy, dz} <= std::array<std::int64_t, 3>{0, 0, 0}) continue;
          const auto it = index.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == index.end()) continue;
          if (any_within(points, members[c], members[it->second], r2)) links[c].push_back(it->second);
        }
      }
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nc); ++c) scan_cell(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < nc; ++c) scan_cell(c);
  }

  UnionFind uf(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    for (auto o : links[c]) uf.unite(c, o);
  }
  // cells are numbered by first point, so this numbers components by first point too
  const auto cell_label = uf.labels();
  std::vector<std::uint32_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = static_cast<std::uint32_t>(cell_label[cell_of[i]]);
  return label;
}

std::vector<InstancePrediction> group(const LabeledCloud& cloud, const ModelOutput& output,
                                      const GroupingParams& params, std::span<const int> instance_classes,
                                      GroupingMode mode, Exec exec) {
  params.validate();
  output.validate(cloud.size());
  std::vector<int> classes(instance_classes.begin(), instance_classes.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  for (int c : classes) {
    if (!params.min_points.count(c)) fail(ErrorCode::MissingThreshold, "no Gnp for class " + std::to_string(c));
    if (c < 0 || static_cast<std::size_t>(c) >= output.n_classes) {
      fail(ErrorCode::ShapeError, "class " + std::to_string(c) + " has no score column");
    }
  }

  std::vector<InstancePrediction> preds;
  for (int c : classes) {
    std::vector<std::uint32_t> cand;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (output.score(i, c) >= params.score_threshold) cand.push_back(static_cast<std::uint32_t>(i));
    }
    if (cand.empty()) continue;
    const std::size_t gnp = params.min_points.at(c);
    std::vector<InstancePrediction> found;
    const auto cluster = [&](bool shifted) {
      std::vector<Vec3> pts(cand.size());
      for (std::size_t k = 0; k < cand.size(); ++k) {
        pts[k] = cloud.points[cand[k]].cast<double>();
        if (shifted) pts[k] += output.offsets[cand[k]].cast<double>();
      }
      const auto label = radius_components(pts, params.radius, exec);
      const std::size_t nl = *std::max_element(label.begin(), label.end()) + 1;
      std::vector<InstancePrediction> groups(nl);
      for (std::size_t k = 0; k < cand.size(); ++k) groups[label[k]].point_indices.push_back(cand[k]);
      for (auto& g : groups) {
        if (g.point_indices.size() < gnp) continue;
        double sum = 0.0;
        for (auto i : g.point_indices) sum += output.score(i, c);
        g.class_id = c;
        g.confidence = sum / static_cast<double>(g.point_indices.size());
        const bool dup = std::any_of(found.begin(), found.end(),
                                     [&](const InstancePrediction& p) { return p.point_indices == g.point_indices; });
        if (!dup) found.push_back(std::move(g));
      }
    };
    cluster(true);
    if (mode == GroupingMode::dual) cluster(false);
    std::sort(found.begin(), found.end(), [](const InstancePrediction& a, const InstancePrediction& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      if (a.point_indices.front() != b.point_indices.front()) return a.point_indices.front() < b.point_indices.front();
      return a.point_indices < b.point_indices;
    });
    for (auto& f : found) preds.push_back(std::move(f));
  }
  return preds;
}

}  // namespace forge::instgroup
