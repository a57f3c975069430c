#include "hdoms/noise_model.hpp"
#include "hdoms/xbar.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace hdoms;

namespace {

CrossbarTile programmed_tile(std::size_t rows, std::size_t cols, unsigned bits) {
  std::mt19937_64 rng(5);
  const auto grid = weight_grid(bits, 1.0);
  std::vector<double> w(rows * cols);
  for (auto& v : w) v = grid[rng() % grid.size()];
  CrossbarTile tile(2 * rows, cols, TileMode::Differential, 1U << bits, 1.0);
  tile.program(differential_targets(w, rows, cols, 1.0, 1.0), NoiseModel::default_model(), TimeBucket::Day1, 1);
  return tile;
}

}  // namespace

static void BM_Program(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(programmed_tile(64, 1024, 3));
}
BENCHMARK(BM_Program)->Unit(benchmark::kMillisecond);

// One sensing cycle over every column of a 64-row tile.
static void BM_MvmSense(benchmark::State& state) {
  const auto tile = programmed_tile(64, static_cast<std::size_t>(state.range(0)), 3);
  RramConfig cfg;
  std::vector<std::int8_t> x(64);
  std::mt19937_64 rng(9);
  for (auto& v : x) v = (rng() & 1U) ? 1 : -1;
  for (auto _ : state) benchmark::DoNotOptimize(mvm_sense(tile, 0, x, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MvmSense)->Arg(128)->Arg(1024);

static void BM_EncodeElementwise(benchmark::State& state) {
  const std::size_t rows = 64, dim = 2048;
  const auto tile = programmed_tile(rows, dim, 2);
  RramConfig cfg;
  const std::vector<std::int8_t> inputs(rows * dim, 1);
  const auto mode = state.range(0) ? EncodeMode::Chunked : EncodeMode::Naive;
  for (auto _ : state) benchmark::DoNotOptimize(encode_elementwise(tile, inputs, mode, 64, cfg, 1.0));
}
BENCHMARK(BM_EncodeElementwise)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_MeasureBer(benchmark::State& state) {
  BerOptions opts;
  opts.vectors = 100;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        measure_ber(static_cast<unsigned>(state.range(0)), TimeBucket::Day1, NoiseModel::default_model(), opts));
}
BENCHMARK(BM_MeasureBer)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
