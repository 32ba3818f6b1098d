#pragma once

#include "forge/core/cloud.hpp"
#include "forge/core/parallel.hpp"

#include <cstdint>
#include <vector>

namespace forge {

/// Greedy farthest point sampling. The first index is drawn from `seed`; each
/// following index maximizes the distance to the selected set (ties go to the
/// lower index).
std::vector<std::size_t> farthest_point_sample(const LabeledCloud& cloud, std::size_t k, std::uint64_t seed,
                                               Exec exec = Exec::parallel);

/// Same as above with the first index fixed.
std::vector<std::size_t> farthest_point_sample_from(const LabeledCloud& cloud, std::size_t k, std::size_t first,
                                                    Exec exec = Exec::parallel);

/// Splits the XY plane into square blocks of `block_size` and keeps
/// min(points_per_block, population) uniformly drawn points of every block.
/// Blocks are emitted in key order, kept points in ascending source order.
LabeledCloud blockwise_downsample(const LabeledCloud& cloud, double block_size, std::size_t points_per_block,
                                  std::uint64_t seed, std::vector<std::size_t>* source_indices = nullptr);

}  // namespace forge
