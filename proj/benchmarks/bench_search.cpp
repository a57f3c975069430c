#include "hdoms/fdr.hpp"
#include "hdoms/search.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace hdoms;

namespace {

Hypervector random_hv(std::size_t dim, std::mt19937_64& rng) {
  Hypervector h(dim);
  for (auto& w : h.words()) w = rng();
  return h;
}

struct Library {
  ReferenceIndex index;
  std::vector<Hypervector> queries;
};

Library make_library(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(1);
  std::vector<Hypervector> refs;
  std::vector<double> masses;
  std::vector<std::uint8_t> decoy;
  refs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    refs.push_back(random_hv(dim, rng));
    masses.push_back(500.0 + 3000.0 * static_cast<double>(i) / static_cast<double>(n));
    decoy.push_back(static_cast<std::uint8_t>(i & 1U));
  }
  Library lib{ReferenceIndex(refs, masses, decoy), {}};
  for (int q = 0; q < 16; ++q) lib.queries.push_back(random_hv(dim, rng));
  return lib;
}

}  // namespace

// One query against an unrestricted candidate set (open search worst case).
static void BM_HammingTopk(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto lib = make_library(n, dim);
  std::size_t q = 0;
  for (auto _ : state) {
    auto top = hamming_topk(lib.queries[q++ % lib.queries.size()], lib.index.all(), 5);
    benchmark::DoNotOptimize(top);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_HammingTopk)->Args({10000, 8192})->Args({100000, 8192})->Args({100000, 2048})
    ->Unit(benchmark::kMillisecond);

static void BM_CandidateRange(benchmark::State& state) {
  const auto lib = make_library(100000, 64);
  double m = 500.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(candidate_range(lib.index, m, 0.05));
    m = m > 3400.0 ? 500.0 : m + 1.37;
  }
}
BENCHMARK(BM_CandidateRange);

static void BM_FdrFilter(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<ScoredMatch> matches;
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(state.range(0)); ++i)
    matches.push_back({i, i, static_cast<std::int32_t>(rng() % 4000), (rng() & 3U) == 0});
  for (auto _ : state) benchmark::DoNotOptimize(fdr_filter(matches, 0.01));
}
BENCHMARK(BM_FdrFilter)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
