#pragma once

#include "hdoms/encoder.hpp"
#include "hdoms/kv_config.hpp"
#include "hdoms/noise_model.hpp"
#include "hdoms/search.hpp"
#include "hdoms/spectrum.hpp"
#include "hdoms/synthetic.hpp"
#include "hdoms/xbar.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hdoms {

/// How a synthetic bench is turned into a search problem.
struct BenchEvalConfig {
  PreprocessConfig preprocess;
  BinConfig bins;
  double window = kOpenWindow;
  double fdr_threshold = 0.01;
  bool decoys = true;
  std::uint64_t decoy_seed = 1;
  unsigned threads = 0;
};

/// Encoded library (targets then decoys) and queries with ground truth.
struct EncodedBench {
  ReferenceIndex index;
  std::vector<Hypervector> queries;
  std::vector<double> query_masses;
  /// Reference id of each query's true match; -1 when the query or its
  /// reference was rejected by preprocessing (counted as a miss).
  std::vector<std::int64_t> truth;
  std::size_t query_total = 0;
  std::size_t target_count = 0;
};

EncodedBench encode_bench(const SyntheticBench& bench, const EncoderConfig& encoder, const BenchEvalConfig& eval);

/// Flips every stored reference bit independently with probability ber. The
/// flip pattern of a reference depends only on (seed, reference id), and the
/// flips at a lower ber are a subset of those at a higher one.
void inject_bit_errors(ReferenceIndex& index, double ber, std::uint64_t seed);

struct RetrievalOutcome {
  double retrieval_rate = 0.0;  // rank-1 hits / query_total
  std::size_t correct = 0;
  std::size_t accepted_count = 0;  // targets passing the FDR filter
};

RetrievalOutcome evaluate_retrieval(const EncodedBench& bench, const ReferenceIndex& index,
                                    const BenchEvalConfig& eval);

/// One outcome per ber, errors injected into a copy of the clean index.
std::vector<RetrievalOutcome> retrieval_vs_ber(const EncodedBench& bench, std::span<const double> bers,
                                               std::uint64_t flip_seed, const BenchEvalConfig& eval);

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepKind : std::uint8_t { Robustness, Dimension, Rram };

std::string_view to_string(SweepKind kind) noexcept;

/// Grid definition of a sweep, read from a `key = value` spec file.
struct SweepSpec {
  SweepKind kind = SweepKind::Robustness;
  std::vector<std::size_t> dims{8192};
  std::vector<double> bers{0.0, 0.1};
  std::vector<unsigned> id_bits{3};
  std::vector<unsigned> cell_bits{1, 2, 3};
  std::vector<std::size_t> rows{4, 16, 64};
  std::vector<TimeBucket> time_buckets{kAllTimeBuckets.begin(), kAllTimeBuckets.end()};
  std::vector<std::uint64_t> seeds{1, 2, 3};

  SyntheticBenchSpec bench;
  EncoderConfig encoder;  // dim and id precision are taken from the grid
  BenchEvalConfig eval;

  RramConfig rram;
  NoiseModel noise = NoiseModel::default_model();
  BerOptions ber_options;
  NmseOptions nmse_options;

  static constexpr std::size_t kMinRepetitions = 3;

  /// Throws ConfigError on unknown keys or invalid values. Relative paths
  /// (noise_config) resolve against base_dir.
  static SweepSpec from_config(const KvConfig& cfg, const std::filesystem::path& base_dir = {});
  static SweepSpec load(const std::filesystem::path& path);

  /// Full check for user-supplied specs, including the repetition minimum.
  void validate() const;
  /// Structural check used by the sweep functions: non-empty axes, valid values.
  void validate_axes() const;
};

struct RobustnessRow {
  std::size_t dim = 0;
  unsigned id_bits = 0;
  double ber = 0.0;
  std::uint64_t seed = 0;
  double retrieval_rate = 0.0;
  std::size_t accepted_count = 0;
};

struct DimensionRow {
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  double retrieval_rate = 0.0;
};

struct RramRow {
  unsigned bits_per_cell = 0;
  TimeBucket bucket = TimeBucket::T0;
  std::size_t rows = 0;
  double ber = 0.0;
  double nmse = 0.0;
  std::uint64_t seed = 0;
};

/// Rows in grid order (dim, id_bits, ber, seed).
std::vector<RobustnessRow> sweep_robustness(const SweepSpec& spec);
/// Rows in grid order (dim, seed); uses the single entry of spec.bers.
std::vector<DimensionRow> sweep_dimension(const SweepSpec& spec);
/// Rows in grid order (bits_per_cell, time bucket, rows, seed).
std::vector<RramRow> sweep_rram(const SweepSpec& spec);

void write_robustness_csv(std::ostream& out, std::span<const RobustnessRow> rows);
void write_dimension_csv(std::ostream& out, std::span<const DimensionRow> rows);
void write_rram_csv(std::ostream& out, std::span<const RramRow> rows);

/// Runs the sweep named by spec.kind and writes its CSV.
void run_sweep(const SweepSpec& spec, std::ostream& out);

}  // namespace hdoms
