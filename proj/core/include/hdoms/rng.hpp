#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hdoms {

/// Named random streams. Every consumer draws from its own stream so adding a
/// consumer never perturbs the values another one sees.
enum class Stream : std::uint64_t {
  IdFamily = 1,
  LevelBase = 2,
  LevelFlips = 3,
  Decoys = 4,
  CellNoise = 5,
  BitFlips = 6,
  Synthetic = 7,
  Measurement = 8,
  StorageNoise = 9,
};

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator (SplitMix64 in counter mode). The value at position i
/// is a pure function of (seed, stream, substream, i), so any element of a
/// random family can be regenerated independently and identically on every
/// platform.
class CounterRng {
public:
  using result_type = std::uint64_t;

  constexpr CounterRng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0) noexcept
      : key_(derive_key(seed, static_cast<std::uint64_t>(stream), substream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  [[nodiscard]] constexpr result_type at(std::uint64_t index) const noexcept {
    return mix64(key_ + (index + 1) * kGolden);
  }

  constexpr result_type operator()() noexcept { return at(counter_++); }

  /// Uniform double in [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Multiply-high reduction; bias is below 2^-64 * n.
  std::uint64_t below(std::uint64_t n) noexcept {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>((*this)()) * n) >> 64);
  }

  /// Standard normal via Box-Muller (one draw per call, the sine branch is discarded).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  void seek(std::uint64_t counter) noexcept { counter_ = counter; }

  /// Standard normal at random-access position i (consumes positions 2i, 2i+1).
  [[nodiscard]] double normal_at(std::uint64_t i) const noexcept {
    const double u1 = 1.0 - static_cast<double>(at(2 * i) >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(at(2 * i + 1) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream,
                                            std::uint64_t sub) noexcept {
    std::uint64_t k = mix64(seed ^ 0x6a09e667f3bcc908ULL);
    k = mix64(k ^ (stream * 0xd1b54a32d192ed03ULL));
    return mix64(k ^ (sub * 0xa0761d6478bd642fULL + 0x3c6ef372fe94f82bULL));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hdoms
