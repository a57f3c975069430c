#include "hdoms/xbar.hpp"

#include "hdoms/error.hpp"
#include "hdoms/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hdoms {

void RramConfig::validate() const {
  if (bits_per_cell < 1 || bits_per_cell > 3) throw ConfigError("bits_per_cell must be 1, 2 or 3");
  if (!(g_max > 0.0)) throw ConfigError("g_max must be positive");
  if (adc_bits > 24) throw ConfigError("adc_bits must be at most 24 (0 = ideal)");
  if (!(v_pulse > 0.0)) throw ConfigError("v_pulse must be positive");
  if (max_active_rows < 1 || max_active_rows > 64) throw ConfigError("max_active_rows must be in [1, 64]");
  if (tile_rows < 2 || tile_cols < 1) throw ConfigError("tile shape must be at least 2 x 1");
  if (max_active_rows > tile_rows / 2) throw ConfigError("max_active_rows exceeds the logical rows of a tile");
  if (settle_time > 0.0 && !(capacitance > 0.0)) throw ConfigError("capacitance must be positive");
}

CrossbarTile::CrossbarTile(std::size_t physical_rows, std::size_t cols, TileMode mode, unsigned levels_per_cell,
                           double g_max)
    : rows_(physical_rows), cols_(cols), mode_(mode), levels_(levels_per_cell), g_max_(g_max),
      g_(physical_rows * cols, 0.0), targets_(physical_rows * cols, 0.0) {
  if (mode == TileMode::Differential && physical_rows % 2 != 0)
    throw ConfigError("differential tiles need an even number of physical rows");
  if (!(g_max > 0.0)) throw ConfigError("g_max must be positive");
}

void CrossbarTile::program(std::span<const double> targets, const NoiseModel& noise, TimeBucket bucket,
                           std::uint64_t seed, std::span<const std::uint64_t> row_keys) {
  if (targets.size() != g_.size()) throw DimensionMismatch("target matrix does not match tile shape");
  if (!row_keys.empty() && row_keys.size() != rows_) throw DimensionMismatch("row key count does not match tile rows");
  const double sigma = noise.sigma(levels_, bucket) * g_max_;
  std::copy(targets.begin(), targets.end(), targets_.begin());
  for (std::size_t r = 0; r < rows_; ++r) {
    const CounterRng rng(seed, Stream::CellNoise, row_keys.empty() ? r : row_keys[r]);
    for (std::size_t c = 0; c < cols_; ++c) {
      const std::size_t i = r * cols_ + c;
      const double value = sigma > 0.0 ? targets[i] + sigma * rng.normal_at(c) : targets[i];
      g_[i] = std::clamp(value, 0.0, g_max_);
    }
  }
}

DifferentialPair map_differential(double w, double w_max, double g_max) {
  if (!(w_max > 0.0)) throw DomainError("W_max must be positive");
  if (!(std::abs(w) <= w_max)) throw DomainError("|W| exceeds W_max");
  return {0.5 * (1.0 + w / w_max) * g_max, 0.5 * (1.0 - w / w_max) * g_max};
}

std::vector<double> differential_targets(std::span<const double> weights, std::size_t rows, std::size_t cols,
                                         double w_max, double g_max) {
  if (weights.size() != rows * cols) throw DimensionMismatch("weight matrix does not match shape");
  std::vector<double> t(2 * rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const auto p = map_differential(weights[r * cols + c], w_max, g_max);
      t[(2 * r) * cols + c] = p.g_plus;
      t[(2 * r + 1) * cols + c] = p.g_minus;
    }
  return t;
}

std::vector<double> weight_grid(unsigned bits_per_cell, double w_max) {
  const unsigned levels = 1U << bits_per_cell;
  std::vector<double> grid(levels);
  for (unsigned k = 0; k < levels; ++k) grid[k] = w_max * (2.0 * k / (levels - 1) - 1.0);
  return grid;
}

double source_line_voltage(double weighted_sum, double total_g, std::size_t active_rows, const RramConfig& cfg) {
  if (active_rows == 0) return cfg.v_ref;
  double delta = weighted_sum / (static_cast<double>(active_rows) * cfg.g_max) * cfg.v_pulse;
  if (cfg.settle_time > 0.0) delta *= 1.0 - std::exp(-cfg.settle_time * total_g / cfg.capacitance);
  return cfg.v_ref + delta;
}

std::uint32_t adc_code(double voltage, const RramConfig& cfg) {
  const double levels = std::ldexp(1.0, static_cast<int>(cfg.adc_bits));
  const double lo = cfg.v_ref - cfg.v_pulse;
  const double scaled = std::floor((voltage - lo) / (2.0 * cfg.v_pulse) * levels);
  return static_cast<std::uint32_t>(std::clamp(scaled, 0.0, levels - 1.0));
}

double adc_reconstruct(std::uint32_t code, const RramConfig& cfg) {
  const double levels = std::ldexp(1.0, static_cast<int>(cfg.adc_bits));
  const double step = 2.0 * cfg.v_pulse / levels;
  return cfg.v_ref - cfg.v_pulse + (static_cast<double>(code) + 0.5) * step;
}

double adc_quantize(double voltage, const RramConfig& cfg) {
  if (cfg.adc_bits == 0) return voltage;
  return adc_reconstruct(adc_code(voltage, cfg), cfg);
}

double decode_mac(double voltage, std::size_t active_rows, const RramConfig& cfg, double w_max) {
  return (voltage - cfg.v_ref) / cfg.v_pulse * static_cast<double>(active_rows) * w_max;
}

namespace {

void check_sense_args(const CrossbarTile& tile, std::size_t row_begin, std::size_t active, const RramConfig& cfg) {
  if (tile.mode() != TileMode::Differential) throw ConfigError("MVM sensing needs a differential tile");
  if (active > cfg.max_active_rows)
    throw RowLimitExceeded(std::to_string(active) + " rows activated, limit is " + std::to_string(cfg.max_active_rows));
  if (row_begin + active > tile.logical_rows()) throw DimensionMismatch("activated rows exceed the tile");
}

// Analog V_SL of one column for logical rows [row_begin, row_begin + x.size()).
double sense_column(const CrossbarTile& tile, std::size_t row_begin, std::span<const std::int8_t> x,
                    std::size_t col, const RramConfig& cfg) {
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double gp = tile.g(2 * (row_begin + i), col);
    const double gm = tile.g(2 * (row_begin + i) + 1, col);
    weighted += static_cast<double>(x[i]) * (gp - gm);
    total += gp + gm;
  }
  return source_line_voltage(weighted, total, x.size(), cfg);
}

}  // namespace

SenseOutput mvm_sense(const CrossbarTile& tile, std::size_t row_begin, std::span<const std::int8_t> x,
                      const RramConfig& cfg, std::size_t col_begin, std::size_t col_end) {
  check_sense_args(tile, row_begin, x.size(), cfg);
  for (const auto v : x)
    if (v < -1 || v > 1) throw DomainError("sensing inputs must be -1, 0 or +1");
  col_end = std::min(col_end, tile.cols());
  SenseOutput out;
  for (std::size_t c = col_begin; c < col_end; ++c) {
    const double v = sense_column(tile, row_begin, x, c, cfg);
    out.voltage.push_back(v);
    if (cfg.adc_bits == 0) {
      out.adc_voltage.push_back(v);
    } else {
      const auto code = adc_code(v, cfg);
      out.codes.push_back(code);
      out.adc_voltage.push_back(adc_reconstruct(code, cfg));
    }
  }
  return out;
}

ElementwiseResult encode_elementwise(const CrossbarTile& id_tile, std::span<const std::int8_t> lv_inputs,
                                     EncodeMode mode, std::size_t chunk_count, const RramConfig& cfg,
                                     double w_max) {
  const std::size_t rows = id_tile.logical_rows();
  const std::size_t dim = id_tile.cols();
  if (lv_inputs.size() != rows * dim) throw DimensionMismatch("level inputs do not match the ID tile");

  std::size_t chunk = 1;
  if (mode == EncodeMode::Chunked) {
    if (chunk_count == 0 || dim % chunk_count != 0) throw ChunkMismatch("chunk_count must divide the dimension");
    chunk = dim / chunk_count;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t d = 0; d < dim; ++d)
        if (lv_inputs[r * dim + d] != lv_inputs[r * dim + (d / chunk) * chunk])
          throw ChunkMismatch("level input of row " + std::to_string(r) + " is not constant within chunk " +
                              std::to_string(d / chunk));
  }

  ElementwiseResult result;
  result.sums.assign(dim, 0.0);
  const std::size_t batch = std::min(cfg.max_active_rows, std::max<std::size_t>(rows, 1));
  std::vector<std::int8_t> x;
  for (std::size_t b0 = 0; b0 < rows; b0 += batch) {
    const std::size_t b1 = std::min(rows, b0 + batch);
    check_sense_args(id_tile, b0, b1 - b0, cfg);
    x.resize(b1 - b0);
    // One cycle drives every row of the batch with one input each and reads
    // the columns sharing that input: a single column (naive) or a chunk.
    for (std::size_t start = 0; start < dim; start += chunk) {
      for (std::size_t r = b0; r < b1; ++r) x[r - b0] = lv_inputs[r * dim + start];
      for (std::size_t d = start; d < start + chunk; ++d) {
        const double v = adc_quantize(sense_column(id_tile, b0, x, d, cfg), cfg);
        result.sums[d] += decode_mac(v, x.size(), cfg, w_max);
      }
      ++result.cycles;
    }
  }
  return result;
}

std::vector<std::uint32_t> segment_values(const Hypervector& h, unsigned bits_per_cell) {
  if (bits_per_cell < 1 || bits_per_cell > 3) throw ConfigError("bits_per_cell must be 1, 2 or 3");
  if (h.dim() % bits_per_cell != 0) throw DimensionMismatch("dimension must be divisible by bits per cell");
  std::vector<std::uint32_t> out(h.dim() / bits_per_cell);
  for (std::size_t s = 0; s < out.size(); ++s) {
    std::uint32_t v = 0;
    for (unsigned k = 0; k < bits_per_cell; ++k) v = (v << 1) | (h.get(s * bits_per_cell + k) > 0 ? 1U : 0U);
    out[s] = v;
  }
  return out;
}

std::vector<double> store_hypervector(const Hypervector& h, unsigned bits_per_cell, double g_max) {
  const auto segments = segment_values(h, bits_per_cell);
  const double h_max = static_cast<double>((1U << bits_per_cell) - 1U);
  std::vector<double> g(segments.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(segments[i]) / h_max * g_max;
  return g;
}

Hypervector read_hypervector(std::span<const double> g, std::size_t dim, unsigned bits_per_cell, double g_max) {
  if (bits_per_cell < 1 || bits_per_cell > 3) throw ConfigError("bits_per_cell must be 1, 2 or 3");
  if (g.size() * bits_per_cell != dim) throw DimensionMismatch("cell count does not match dimension");
  const double h_max = static_cast<double>((1U << bits_per_cell) - 1U);
  Hypervector h(dim);
  for (std::size_t s = 0; s < g.size(); ++s) {
    const double level = std::clamp(std::round(g[s] / g_max * h_max), 0.0, h_max);
    const auto v = static_cast<std::uint32_t>(level);
    for (unsigned k = 0; k < bits_per_cell; ++k)
      if ((v >> (bits_per_cell - 1 - k)) & 1U) h.set(s * bits_per_cell + k, 1);
  }
  return h;
}

double measure_ber(unsigned bits_per_cell, TimeBucket bucket, const NoiseModel& noise, const BerOptions& opts) {
  const double sigma = noise.sigma(1U << bits_per_cell, bucket) * opts.g_max;
  std::size_t errors = 0;
  std::vector<std::uint64_t> words(opts.dim / 64);
  for (std::size_t v = 0; v < opts.vectors; ++v) {
    const CounterRng data(opts.seed, Stream::Measurement, v);
    for (std::size_t w = 0; w < words.size(); ++w) words[w] = data.at(w);
    const auto h = Hypervector::from_words(opts.dim, words);
    auto g = store_hypervector(h, bits_per_cell, opts.g_max);
    const CounterRng cell_noise(opts.seed, Stream::CellNoise, v);
    for (std::size_t c = 0; c < g.size(); ++c)
      g[c] = std::clamp(g[c] + sigma * cell_noise.normal_at(c), 0.0, opts.g_max);
    errors += hamming_distance(h, read_hypervector(g, opts.dim, bits_per_cell, opts.g_max));
  }
  const double total = static_cast<double>(opts.vectors * opts.dim);
  return total > 0 ? static_cast<double>(errors) / total : 0.0;
}

double measure_mvm_nmse(unsigned bits_per_cell, std::size_t active_rows, const NoiseModel& noise,
                        const RramConfig& cfg, const NmseOptions& opts) {
  RramConfig sense = cfg;
  sense.bits_per_cell = bits_per_cell;
  const unsigned levels = 1U << bits_per_cell;
  const auto grid = weight_grid(bits_per_cell, 1.0);
  const std::size_t rows = active_rows;
  const std::size_t cols = opts.cols;

  double sum = 0.0;
  double sum_sq = 0.0;
  double err_sq = 0.0;
  std::size_t samples = 0;

  std::vector<double> weights(rows * cols);
  std::vector<std::int8_t> x(rows);
  std::vector<std::uint64_t> keys(2 * rows);
  for (std::size_t t = 0; t < opts.trials; ++t) {
    CounterRng rng(cfg.seed, Stream::Measurement, (static_cast<std::uint64_t>(bits_per_cell) << 48) ^ (rows << 32) ^ t);
    for (auto& w : weights) w = grid[rng.below(levels)];
    for (auto& xi : x) xi = (rng() & 1U) ? 1 : -1;
    for (std::size_t r = 0; r < keys.size(); ++r) keys[r] = (t << 8) ^ r;

    CrossbarTile tile(2 * rows, cols, TileMode::Differential, levels, cfg.g_max);
    tile.program(differential_targets(weights, rows, cols, 1.0, cfg.g_max), noise, cfg.time_bucket,
                 cfg.seed ^ (static_cast<std::uint64_t>(bits_per_cell) << 40) ^ (rows << 20), keys);
    const auto out = mvm_sense(tile, 0, x, sense);
    for (std::size_t c = 0; c < cols; ++c) {
      double exact = 0.0;
      for (std::size_t r = 0; r < rows; ++r) exact += x[r] * weights[r * cols + c];
      const double decoded = decode_mac(out.adc_voltage[c], rows, sense);
      err_sq += (decoded - exact) * (decoded - exact);
      sum += exact;
      sum_sq += exact * exact;
      ++samples;
    }
  }
  if (samples == 0) return 0.0;
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double mse = err_sq / n;
  if (var <= 0.0) return mse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return mse / var;
}

}  // namespace hdoms
