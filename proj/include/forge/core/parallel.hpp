#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace forge {

/// Selects between the OpenMP kernel and its serial reference.
enum class Exec { serial, parallel };

void set_thread_count(int threads);
int thread_count();

/// Dot product with a fixed blocking, so the result does not depend on the
/// number of worker threads.
double deterministic_dot(std::span<const double> a, std::span<const double> b, Exec exec = Exec::parallel);

}  // namespace forge
