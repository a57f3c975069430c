#pragma once

#include "hdoms/hypervector.hpp"
#include "hdoms/noise_model.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace hdoms {

/// Behavioural parameters of an MLC RRAM crossbar. Voltages and conductances
/// are normalized; only their ratios enter the sensing equation.
struct RramConfig {
  unsigned bits_per_cell = 3;  // n, 2^n conductance levels
  double g_max = 1.0;
  unsigned adc_bits = 8;  // 0 selects an ideal (continuous) ADC
  double v_ref = 0.5;
  double v_pulse = 0.5;
  std::size_t max_active_rows = 64;  // N
  double capacitance = 1.0;          // only used when settle_time > 0
  double settle_time = 0.0;          // <= 0: steady state
  std::size_t tile_rows = 256;
  std::size_t tile_cols = 256;
  TimeBucket time_bucket = TimeBucket::Min60;
  std::uint64_t seed = 1;

  [[nodiscard]] unsigned levels_per_cell() const noexcept { return 1U << bits_per_cell; }
  void validate() const;
};

enum class TileMode : std::uint8_t { Differential, Direct };

/// Conductance matrix, row-major over physical rows. In differential mode
/// physical rows 2i and 2i+1 hold g+ and g- of logical row i.
class CrossbarTile {
public:
  CrossbarTile(std::size_t physical_rows, std::size_t cols, TileMode mode, unsigned levels_per_cell,
               double g_max);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t logical_rows() const noexcept {
    return mode_ == TileMode::Differential ? rows_ / 2 : rows_;
  }
  [[nodiscard]] TileMode mode() const noexcept { return mode_; }
  [[nodiscard]] unsigned levels_per_cell() const noexcept { return levels_; }
  [[nodiscard]] double g_max() const noexcept { return g_max_; }

  [[nodiscard]] double g(std::size_t r, std::size_t c) const noexcept { return g_[r * cols_ + c]; }
  [[nodiscard]] double target(std::size_t r, std::size_t c) const noexcept { return targets_[r * cols_ + c]; }
  [[nodiscard]] std::span<const double> conductances() const noexcept { return g_; }
  [[nodiscard]] std::span<const double> targets() const noexcept { return targets_; }

  /// g = clip(target + N(0, sigma), 0, g_max) per cell. The noise of physical
  /// row r is drawn from stream row_keys[r] (row index when empty), so a row
  /// programmed into different tiles under the same key relaxes identically.
  void program(std::span<const double> targets, const NoiseModel& noise, TimeBucket bucket,
               std::uint64_t seed, std::span<const std::uint64_t> row_keys = {});

private:
  std::size_t rows_;
  std::size_t cols_;
  TileMode mode_;
  unsigned levels_;
  double g_max_;
  std::vector<double> g_;
  std::vector<double> targets_;
};

struct DifferentialPair {
  double g_plus = 0.0;
  double g_minus = 0.0;
};

/// g+ = (1 + W/W_max) g_max / 2, g- = (1 - W/W_max) g_max / 2. Throws DomainError if |W| > W_max.
DifferentialPair map_differential(double w, double w_max, double g_max);

/// Differential targets for a logical weight matrix (rows x cols, row-major).
std::vector<double> differential_targets(std::span<const double> weights, std::size_t rows, std::size_t cols,
                                         double w_max, double g_max);

/// Weight grid of an n-bit differential cell: 2^n values evenly spaced in [-W_max, W_max].
std::vector<double> weight_grid(unsigned bits_per_cell, double w_max);

/// Steady-state source-line voltage for one column:
/// V_ref + sum_i x_i (g+_i - g-_i) / (N g_max) * V_pulse, optionally scaled by
/// the exponential settling factor 1 - exp(-t * sum_g / C).
double source_line_voltage(double weighted_sum, double total_g, std::size_t active_rows, const RramConfig& cfg);

/// Uniform mid-rise ADC over [V_ref - V_pulse, V_ref + V_pulse].
std::uint32_t adc_code(double voltage, const RramConfig& cfg);
double adc_reconstruct(std::uint32_t code, const RramConfig& cfg);
/// ADC round trip; identity when adc_bits == 0.
double adc_quantize(double voltage, const RramConfig& cfg);

/// Inverse of the sensing equation: MAC in weight units (W_max scales the result).
double decode_mac(double voltage, std::size_t active_rows, const RramConfig& cfg, double w_max = 1.0);

struct SenseOutput {
  std::vector<double> voltage;         // analog V_SL per sensed column
  std::vector<double> adc_voltage;     // after the ADC (equal to voltage when ideal)
  std::vector<std::uint32_t> codes;    // empty for the ideal ADC
};

/// Activates logical rows [row_begin, row_begin + x.size()) of a differential
/// tile with inputs x in {-1, 0, +1} and senses columns [col_begin, col_end).
/// Throws RowLimitExceeded when more than max_active_rows rows are driven.
SenseOutput mvm_sense(const CrossbarTile& tile, std::size_t row_begin, std::span<const std::int8_t> x,
                      const RramConfig& cfg, std::size_t col_begin = 0,
                      std::size_t col_end = std::numeric_limits<std::size_t>::max());

enum class EncodeMode : std::uint8_t { Naive, Chunked };

struct ElementwiseResult {
  std::vector<double> sums;  // decoded per-dimension MAC, in weight units
  std::size_t cycles = 0;
};

/// ID-level binding in memory. The tile stores one ID hypervector per logical
/// row (horizontal); lv_inputs holds the matching level vectors (rows x cols,
/// +-1). Rows are driven in batches of at most N. Naive mode reads one column
/// per cycle (cols cycles per batch); chunked mode feeds one chunk-constant
/// input per cycle and reads the whole chunk (chunk_count cycles per batch).
/// Throws ChunkMismatch if a chunked input is not constant within a chunk.
ElementwiseResult encode_elementwise(const CrossbarTile& id_tile, std::span<const std::int8_t> lv_inputs,
                                     EncodeMode mode, std::size_t chunk_count, const RramConfig& cfg,
                                     double w_max);

// ---------------------------------------------------------------------------
// Non-differential n-bit hypervector storage.

/// Segments of n components (first component most significant, -1 -> 0,
/// +1 -> 1) become unsigned integers h'. Requires dim % n == 0.
std::vector<std::uint32_t> segment_values(const Hypervector& h, unsigned bits_per_cell);

/// Target conductances g = h' / (2^n - 1) * g_max, one cell per segment.
std::vector<double> store_hypervector(const Hypervector& h, unsigned bits_per_cell, double g_max);

/// Nearest-level decode of stored conductances back to a hypervector.
Hypervector read_hypervector(std::span<const double> g, std::size_t dim, unsigned bits_per_cell, double g_max);

// ---------------------------------------------------------------------------
// Measurements.

struct BerOptions {
  std::size_t vectors = 100;  // random hypervectors stored
  std::size_t dim = 1536;     // divisible by 64 and by 1, 2, 3
  double g_max = 1.0;
  std::uint64_t seed = 1;
};

/// Storage bit error rate of n-bit cells observed at `bucket`. Cell noise uses
/// common random numbers across buckets, so BER is non-decreasing in time
/// whenever the sigma table is.
double measure_ber(unsigned bits_per_cell, TimeBucket bucket, const NoiseModel& noise, const BerOptions& opts);

struct NmseOptions {
  std::size_t trials = 200;  // MVMs
  std::size_t cols = 32;     // columns sensed per MVM
};

/// Normalized MSE of decoded MVM outputs for random n-bit differential weights
/// and random +-1 inputs over `active_rows` rows: mean((decoded - exact)^2) / var(exact).
/// Uses cfg.adc_bits, cfg.time_bucket, cfg.g_max and cfg.seed.
double measure_mvm_nmse(unsigned bits_per_cell, std::size_t active_rows, const NoiseModel& noise,
                        const RramConfig& cfg, const NmseOptions& opts);

}  // namespace hdoms
