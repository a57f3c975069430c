#include "hdoms/encoder.hpp"
#include "hdoms/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace hdoms;

namespace {

std::vector<Spectrum> preprocessed_queries(std::size_t count) {
  SyntheticBenchSpec spec;
  spec.library_size = 200;
  spec.query_count = count;
  auto bench = generate_synthetic_bench(spec);
  std::vector<Spectrum> out;
  for (const auto& s : bench.queries)
    if (auto p = try_preprocess(s, PreprocessConfig{})) out.push_back(std::move(*p));
  return out;
}

}  // namespace

// Single-threaded encode throughput; range(0) is D, range(1) the ID precision.
static void BM_Encode(benchmark::State& state) {
  EncoderConfig cfg;
  cfg.dim = static_cast<std::size_t>(state.range(0));
  cfg.id_precision_bits = static_cast<unsigned>(state.range(1));
  const Encoder enc(cfg, BinConfig{});
  const auto spectra = preprocessed_queries(64);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(spectra[i++ % spectra.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Encode)->Args({2048, 3})->Args({8192, 1})->Args({8192, 3})->Unit(benchmark::kMicrosecond);

static void BM_GenIdFamily(benchmark::State& state) {
  EncoderConfig cfg;
  cfg.dim = 8192;
  for (auto _ : state) benchmark::DoNotOptimize(gen_id_family(static_cast<std::size_t>(state.range(0)), cfg));
}
BENCHMARK(BM_GenIdFamily)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_Preprocess(benchmark::State& state) {
  SyntheticBenchSpec spec;
  spec.library_size = 200;
  spec.query_count = 64;
  const auto bench = generate_synthetic_bench(spec);
  std::size_t i = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(try_preprocess(bench.queries[i++ % bench.queries.size()], PreprocessConfig{}));
}
BENCHMARK(BM_Preprocess);

BENCHMARK_MAIN();
