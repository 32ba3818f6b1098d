#include "forge/core/sampling.hpp"

#include "forge/core/error.hpp"
#include "forge/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace forge {

namespace {

struct Best {
  double dist;
  std::size_t index;
};

bool better(const Best& a, const Best& b) { return a.dist > b.dist || (a.dist == b.dist && a.index < b.index); }

}  // namespace

std::vector<std::size_t> farthest_point_sample_from(const LabeledCloud& cloud, std::size_t k, std::size_t first,
                                                    Exec exec) {
  const std::size_t n = cloud.size();
  if (k < 1 || k > n) fail(ErrorCode::InvalidArgument, "k must lie in [1, point count]");
  if (first >= n) fail(ErrorCode::InvalidArgument, "first index out of range");

  std::vector<Vec3> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = cloud.points[i].cast<double>();

  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> selected;
  selected.reserve(k);
  selected.push_back(first);
  std::size_t last = first;

  const auto update_range = [&](std::size_t lo, std::size_t hi) {
    Best best{-1.0, std::numeric_limits<std::size_t>::max()};
    for (std::size_t i = lo; i < hi; ++i) {
      const double d2 = (pts[i] - pts[last]).squaredNorm();
      if (d2 < min_d2[i]) min_d2[i] = d2;
      const Best cand{min_d2[i], i};
      if (better(cand, best)) best = cand;
    }
    return best;
  };

  while (selected.size() < k) {
    min_d2[last] = -1.0;  // selected points stay below any real distance
    Best best{-1.0, std::numeric_limits<std::size_t>::max()};
    if (exec == Exec::parallel) {
#pragma omp parallel
      {
        Best local{-1.0, std::numeric_limits<std::size_t>::max()};
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
          const auto u = static_cast<std::size_t>(i);
          const double d2 = (pts[u] - pts[last]).squaredNorm();
          if (d2 < min_d2[u]) min_d2[u] = d2;
          const Best cand{min_d2[u], u};
          if (better(cand, local)) local = cand;
        }
#pragma omp critical
        if (better(local, best)) best = local;
      }
    } else {
      best = update_range(0, n);
    }
    last = best.index;
    selected.push_back(last);
  }
  return selected;
}

std::vector<std::size_t> farthest_point_sample(const LabeledCloud& cloud, std::size_t k, std::uint64_t seed,
                                               Exec exec) {
  if (cloud.empty() || k < 1 || k > cloud.size()) fail(ErrorCode::InvalidArgument, "k must lie in [1, point count]");
  Rng rng(derive_seed(seed, hash_name("fps")));
  return farthest_point_sample_from(cloud, k, static_cast<std::size_t>(rng.index(cloud.size())), exec);
}

LabeledCloud blockwise_downsample(const LabeledCloud& cloud, double block_size, std::size_t points_per_block,
                                  std::uint64_t seed, std::vector<std::size_t>* source_indices) {
  if (cloud.empty()) fail(ErrorCode::EmptyInput, "cannot downsample an empty cloud");
  if (!(block_size > 0.0)) fail(ErrorCode::InvalidArgument, "block_size must be positive");
  if (points_per_block < 1) fail(ErrorCode::InvalidArgument, "points_per_block must be >= 1");

  const Aabb box = bounds(cloud.points);
  std::map<std::pair<long long, long long>, std::vector<std::size_t>> blocks;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto bx = static_cast<long long>(std::floor((cloud.points[i].x() - box.lo.x()) / block_size));
    const auto by = static_cast<long long>(std::floor((cloud.points[i].y() - box.lo.y()) / block_size));
    blocks[{bx, by}].push_back(i);
  }

  Rng rng(derive_seed(seed, hash_name("blockwise_downsample")));
  std::vector<std::size_t> kept;
  for (auto& [key, members] : blocks) {
    if (members.size() > points_per_block) {
      // partial Fisher-Yates draws points_per_block members without replacement
      for (std::size_t i = 0; i < points_per_block; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(members.size() - i));
        std::swap(members[i], members[j]);
      }
      members.resize(points_per_block);
      std::sort(members.begin(), members.end());
    }
    kept.insert(kept.end(), members.begin(), members.end());
  }
  if (source_indices) *source_indices = kept;
  return cloud.select(kept);
}

}  // namespace forge
