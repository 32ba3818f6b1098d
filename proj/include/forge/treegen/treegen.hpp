#pragma once

#include "forge/core/cloud.hpp"
#include "forge/core/parallel.hpp"
#include "forge/treegen/tree.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace forge::treegen {

struct ExtractConfig {
  int trunk_class = 0;
  int branch_class = 1;
  double bin_size = 0.1;        // m, height bins for the trunk polyline
  std::size_t min_branch_points = 5;
  double attach_margin = 0.05;  // m, slack when deciding a branch sits on the trunk
};

struct TreeGenConfig {
  int trunk_class = 0;
  int branch_class = 1;
  double tip_radius_ratio = 0.1;  // tip radius / base radius
  double length_scale = 0.5;      // per-order length factor
  double radius_scale = 0.6;      // per-order radius factor
  int retry_budget = 20;
  int radial_segments = 12;
  int branch_segments = 4;
  int min_trunk_segments = 8;
  int children_per_branch = 2;    // used for orders without measured records
  double bend = 0.12;             // max per-segment direction perturbation
  double insertion_jitter = 0.1;
  double collision_tolerance = 1e-4;  // m
};

/// Trunk polyline, trunk size and per-branch records of a labeled tree cloud.
/// Throws MissingOrgan when no trunk points exist.
TreeStats extract_stats(const LabeledCloud& base, const ExtractConfig& config = {});

/// Blend of two statistics records at fraction t. Scalars are linear; branch
/// records of each order are paired at random and blended, unmatched records
/// blend towards the other tree's per-order mean.
TreeStats interpolate_stats(const TreeStats& a, const TreeStats& b, double t, std::uint64_t seed);

/// Tapered capsule-chain tree with collision-checked branch placement and a
/// labeled tube mesh. Deterministic in (stats, seed, max_order, config).
TreeModel generate_tree(const TreeStats& stats, std::uint64_t seed, int max_order, const TreeGenConfig& config = {});

struct GeneratedTree {
  std::size_t base_a = 0;
  std::size_t base_b = 0;
  double t = 0.0;
  TreeStats stats;
  TreeModel model;
};

/// n trees, each from a seed-drawn base pair and blend fraction. The stream of
/// tree i depends only on (seed, i), so serial and parallel runs agree.
std::vector<GeneratedTree> generate_population(std::span<const TreeStats> bases, std::size_t n, std::uint64_t seed,
                                               int max_order, const TreeGenConfig& config = {},
                                               Exec exec = Exec::parallel);

}  // namespace forge::treegen
