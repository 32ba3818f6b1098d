// Serial vs parallel timings of the OpenMP kernels. The second argument of
// every benchmark selects the path: 0 = serial reference, 1 = parallel.

#include "fixtures.hpp"
#include "test_support.hpp"

#include "forge/core/parallel.hpp"
#include "forge/core/sampling.hpp"
#include "forge/deform/deform.hpp"
#include "forge/instgroup/instgroup.hpp"
#include "forge/vls/scanner.hpp"

#include <benchmark/benchmark.h>

using namespace forge;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

void BM_FarthestPointSample(benchmark::State& state) {
  const auto cloud = test::random_cloud(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(farthest_point_sample(cloud, 256, 7, exec_of(state)));
}

void BM_Scan(benchmark::State& state) {
  const auto model = treegen::generate_tree(test::simple_stats(3.5, 8, 3), 3, 2);
  vls::ScannerConfig cfg;
  cfg.positions = vls::default_tls_positions(model, 4);
  cfg.angular_resolution_deg = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(vls::scan(model.mesh, cfg, exec_of(state)));
}

void BM_ApplyStiffness(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  LabeledCloud cloud;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < 4 * n; ++z)
        cloud.push_back(Vec3f(x + 0.5f, y + 0.5f, z + 0.5f) * 0.01f, z < 2 * n ? 0 : 1, 0);
  const auto lat = deform::build_lattice(cloud, 0.01, deform::default_materials(2));
  std::vector<double> u(3 * lat.vertex_count());
  Rng rng(5);
  for (auto& v : u) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(deform::apply_stiffness(lat, u, exec_of(state)));
  state.counters["elements"] = static_cast<double>(lat.element_count());
}

void BM_RadiusComponents(benchmark::State& state) {
  const auto cloud = test::random_cloud(static_cast<std::size_t>(state.range(0)), 9);
  std::vector<Vec3> pts;
  for (const auto& p : cloud.points) pts.push_back(p.cast<double>());
  for (auto _ : state) benchmark::DoNotOptimize(instgroup::radius_components(pts, 0.02, exec_of(state)));
}

void BM_DeterministicDot(benchmark::State& state) {
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  Rng rng(11);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(deterministic_dot(a, b, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_FarthestPointSample)->ArgsProduct({{20000, 200000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Scan)->ArgsProduct({{30}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyStiffness)->ArgsProduct({{8, 16}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RadiusComponents)->ArgsProduct({{50000, 200000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DeterministicDot)->ArgsProduct({{1 << 16, 1 << 22}, {0, 1}})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
