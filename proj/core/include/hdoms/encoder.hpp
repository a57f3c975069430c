#pragma once

#include "hdoms/hypervector.hpp"
#include "hdoms/spectrum.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hdoms {

struct EncoderConfig {
  std::size_t dim = 8192;
  std::size_t levels = 16;  // Q, intensity quantization levels
  unsigned id_precision_bits = 3;
  bool chunked = false;  // chunk-constant level hypervectors
  std::size_t chunk_count = 64;
  std::uint64_t seed = 1;

  /// Throws ConfigError: dim % 64, dim % 2Q, precision in [1, 3], and when
  /// chunked, chunk_count | dim and 2Q | chunk_count (each level step flips
  /// whole chunks).
  void validate() const;
};

/// Position (m/z bin) hypervectors with multi-bit signed components.
///
/// Component values are a pure function of (seed, bin, dimension), so rows can
/// be generated on demand. Families below the memory budget are materialized
/// once; larger ones are regenerated per row by the encoder.
class IdFamily {
public:
  static constexpr std::size_t kDefaultBudgetBytes = std::size_t{1} << 30;

  IdFamily(std::size_t num_bins, const EncoderConfig& cfg,
           std::size_t budget_bytes = kDefaultBudgetBytes);

  [[nodiscard]] std::size_t size() const noexcept { return num_bins_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] unsigned precision_bits() const noexcept { return bits_; }
  [[nodiscard]] int max_magnitude() const noexcept { return 1 << (bits_ - 1); }
  [[nodiscard]] bool materialized() const noexcept { return !table_.empty(); }

  /// Requires materialized().
  [[nodiscard]] std::span<const std::int8_t> row(std::size_t bin) const noexcept {
    return {table_.data() + bin * dim_, dim_};
  }

  /// Writes row `bin` into out (size dim()). Works with or without materialization.
  void fill_row(std::size_t bin, std::span<std::int8_t> out) const;

  /// Row `bin` as a standalone value. Throws MissingId.
  [[nodiscard]] MultiBitHypervector operator[](std::size_t bin) const;

private:
  std::size_t num_bins_;
  std::size_t dim_;
  unsigned bits_;
  std::uint64_t seed_;
  std::vector<std::int8_t> table_;
};

IdFamily gen_id_family(std::size_t num_bins, const EncoderConfig& cfg);

/// Q level hypervectors; adjacent levels differ in exactly D/(2Q) components,
/// and flip sets are disjoint so hamming(l_i, l_j) == |i - j| * D / (2Q).
struct LevelFamily {
  std::size_t levels = 0;
  bool chunked = false;
  std::size_t chunk_count = 0;
  std::vector<Hypervector> vectors;
  /// Per level, per dimension: 0 where the component is +1, -1 where it is -1.
  /// Lets the encoder apply the sign with (x ^ m) - m.
  std::vector<std::int8_t> sign_masks;

  [[nodiscard]] std::span<const std::int8_t> mask(std::size_t level) const noexcept {
    const std::size_t dim = vectors.empty() ? 0 : vectors.front().dim();
    return {sign_masks.data() + level * dim, dim};
  }
};

LevelFamily gen_level_family(const EncoderConfig& cfg);

/// floor(intensity * Q) clamped to Q - 1. Throws DomainError outside [0, 1].
std::size_t quantize_intensity(double intensity, std::size_t levels);

/// One peak term of the ID-level sum: ID[bin] bound with level[level].
struct EncodeTerm {
  std::uint32_t bin = 0;
  std::uint32_t level = 0;
};

/// Quantizes bin intensities (normalized by the vector's maximum) into terms.
std::vector<EncodeTerm> quantize_terms(const BinnedVector& v, std::size_t levels);

/// Per-dimension sums sum_i ID_i[d] * LV_i[d]. Throws MissingId.
std::vector<std::int32_t> accumulate_terms(std::span<const EncodeTerm> terms, const IdFamily& ids,
                                           const LevelFamily& lv);

/// Sign quantization; a zero sum maps to +1.
Hypervector sign_quantize(std::span<const std::int32_t> sums);

/// h = Sign(sum over peaks of ID_i (x) LV_i). Throws MissingId.
Hypervector encode(const BinnedVector& v, const IdFamily& ids, const LevelFamily& lv,
                   const EncoderConfig& cfg);

/// Bundles the families with the binning they were generated for.
class Encoder {
public:
  Encoder(const EncoderConfig& cfg, const BinConfig& bins);

  [[nodiscard]] const EncoderConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const BinConfig& bin_config() const noexcept { return bins_; }
  [[nodiscard]] const IdFamily& ids() const noexcept { return ids_; }
  [[nodiscard]] const LevelFamily& level_family() const noexcept { return levels_; }

  /// Bins and encodes an already preprocessed spectrum.
  [[nodiscard]] Hypervector encode(const Spectrum& preprocessed) const;
  [[nodiscard]] Hypervector encode(const BinnedVector& v) const;

  /// Encodes in parallel; output order matches input order.
  [[nodiscard]] std::vector<Hypervector> encode_batch(std::span<const Spectrum> preprocessed,
                                                      unsigned threads) const;

private:
  EncoderConfig cfg_;
  BinConfig bins_;
  IdFamily ids_;
  LevelFamily levels_;
};

}  // namespace hdoms
