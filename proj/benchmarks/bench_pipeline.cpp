#include <random>

#include <benchmark/benchmark.h>

#include "affordmap/fusion.hpp"
#include "affordmap/geometry.hpp"
#include "affordmap/interaction.hpp"
#include "affordmap/metrics.hpp"

namespace {

using namespace affordmap;

std::vector<float> normal_values(std::size_t n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> dist;
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

SpatialMap positive_map(int h, int w, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  SpatialMap m(h, w);
  for (float& x : m.values()) x = dist(rng);
  return m;
}

/// Object attention is a centred blob so the ROI covers about a third of
/// the grid.
io::SampleBundle synthetic_bundle(int grid, int channels) {
  io::SampleBundle b;
  const auto cells = static_cast<std::size_t>(grid) * grid;
  b.features = DenseFeatureMap(grid, grid, channels, normal_values(cells * channels, 1));
  std::vector<float> obj(cells * 2), verb(cells * 2);
  const SpatialMap noise = positive_map(grid, grid, 2);
  for (int l = 0; l < 2; ++l)
    for (int r = 0; r < grid; ++r)
      for (int c = 0; c < grid; ++c) {
        const auto i = static_cast<std::size_t>(r) * grid + c;
        const bool inside = r > grid / 4 && r < 3 * grid / 4 && c > grid / 4 && c < 3 * grid / 4;
        obj[l * cells + i] = inside ? 1.0f : 0.05f;
        verb[l * cells + i] = noise.values()[i];
      }
  b.verb_attention = AttentionStack(2, grid, grid, std::move(verb));
  b.object_attention = AttentionStack(2, grid, grid, std::move(obj));
  b.meta.verb = "hold";
  b.meta.object = "mug";
  b.meta.grid_h = b.meta.grid_w = grid;
  return b;
}

void BM_PcaDecompose(benchmark::State& state) {
  const int grid = static_cast<int>(state.range(0));
  const int channels = static_cast<int>(state.range(1));
  const DenseFeatureMap f(grid, grid, channels,
                          normal_values(static_cast<std::size_t>(grid) * grid * channels, 3));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::pca_decompose(f, {0, 0, grid, grid}, 3));
}
BENCHMARK(BM_PcaDecompose)->Args({16, 64})->Args({32, 384})->Args({32, 768})->Unit(benchmark::kMillisecond);

void BM_GaussianBlur(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const SpatialMap m = positive_map(size, size, 4);
  for (auto _ : state) benchmark::DoNotOptimize(interaction::gaussian_blur(m, 3.0 * size / 224.0));
}
BENCHMARK(BM_GaussianBlur)->Arg(224)->Arg(448)->Unit(benchmark::kMicrosecond);

void BM_RunPipeline(benchmark::State& state) {
  const io::SampleBundle b = synthetic_bundle(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const fusion::FusionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(fusion::run_pipeline(b, cfg));
}
BENCHMARK(BM_RunPipeline)->Args({16, 64})->Args({32, 384})->Unit(benchmark::kMillisecond);

void BM_EvaluateAll(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const SpatialMap pred = positive_map(size, size, 5), gt = positive_map(size, size, 6);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate_all(pred, gt));
}
BENCHMARK(BM_EvaluateAll)->Arg(224)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
