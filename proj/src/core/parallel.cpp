#include "forge/core/parallel.hpp"

#include <omp.h>

namespace forge {

namespace {
constexpr std::size_t kDotBlock = 4096;
}

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

double deterministic_dot(std::span<const double> a, std::span<const double> b, Exec exec) {
  const std::size_t n = a.size();
  const std::size_t blocks = (n + kDotBlock - 1) / kDotBlock;
  std::vector<double> partial(blocks, 0.0);
  const auto block_sum = [&](std::size_t blk) {
    const std::size_t lo = blk * kDotBlock;
    const std::size_t hi = std::min(n, lo + kDotBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
    partial[blk] = s;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(blocks); ++blk) block_sum(static_cast<std::size_t>(blk));
  } else {
    for (std::size_t blk = 0; blk < blocks; ++blk) block_sum(blk);
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace forge
