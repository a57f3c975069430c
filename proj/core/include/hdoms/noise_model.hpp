#pragma once

#include "hdoms/kv_config.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>

namespace hdoms {

/// Elapsed time since programming at which a conductance is observed.
enum class TimeBucket : std::uint8_t { T0 = 0, Min30 = 1, Min60 = 2, Day1 = 3 };

inline constexpr std::array<TimeBucket, 4> kAllTimeBuckets = {TimeBucket::T0, TimeBucket::Min30,
                                                              TimeBucket::Min60, TimeBucket::Day1};

std::string_view to_string(TimeBucket bucket) noexcept;
/// Accepts "t0", "30min", "60min", "1day". Throws ConfigError.
TimeBucket parse_time_bucket(std::string_view text);

/// Per-cell-type relaxation: Gaussian std-dev (fraction of g_max) indexed by
/// (levels per cell, time bucket). Samples are clipped to [0, g_max] by the
/// programming step.
class NoiseModel {
public:
  NoiseModel() = default;

  /// Table shipped in core/data/noise_sigma.cfg.
  static NoiseModel default_model();
  /// Zero sigma for every cell type and bucket.
  static NoiseModel noiseless();
  /// Every cell type and bucket gets the same sigma.
  static NoiseModel constant(double sigma);

  /// Keys are "<levels>.<bucket>", e.g. "8.60min = 0.05". Throws ConfigError on
  /// unknown keys, negative sigma, or a table decreasing in time.
  static NoiseModel from_config(const KvConfig& cfg);
  static NoiseModel load(const std::filesystem::path& path);

  /// Throws ConfigError when the (levels, bucket) entry is absent.
  [[nodiscard]] double sigma(unsigned levels_per_cell, TimeBucket bucket) const;
  void set_sigma(unsigned levels_per_cell, TimeBucket bucket, double sigma);

  void validate() const;

  [[nodiscard]] std::string to_config_text() const;

private:
  std::map<std::pair<unsigned, TimeBucket>, double> table_;
  bool uniform_ = false;
  double uniform_sigma_ = 0.0;
};

}  // namespace hdoms
