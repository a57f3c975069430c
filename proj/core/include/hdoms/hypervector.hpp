#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hdoms {

/// Bipolar hypervector packed one bit per component: bit 1 is +1, bit 0 is -1.
/// Component d lives in word d/64, bit d%64. The dimension is a multiple of 64.
class Hypervector {
public:
  Hypervector() = default;
  /// All components -1.
  explicit Hypervector(std::size_t dim);

  static Hypervector from_bipolar(std::span<const std::int8_t> values);
  static Hypervector from_words(std::size_t dim, std::span<const std::uint64_t> words);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }
  [[nodiscard]] std::span<std::uint64_t> words() noexcept { return words_; }

  [[nodiscard]] int get(std::size_t d) const noexcept {
    return ((words_[d >> 6] >> (d & 63)) & 1U) ? 1 : -1;
  }
  void set(std::size_t d, int value) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (d & 63);
    if (value > 0) words_[d >> 6] |= mask; else words_[d >> 6] &= ~mask;
  }
  void flip(std::size_t d) noexcept { words_[d >> 6] ^= std::uint64_t{1} << (d & 63); }

  [[nodiscard]] std::vector<std::int8_t> to_bipolar() const;

  friend bool operator==(const Hypervector&, const Hypervector&) = default;

private:
  std::size_t dim_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Number of differing components of two equally sized word spans.
inline std::size_t hamming_words(std::span<const std::uint64_t> a,
                                 std::span<const std::uint64_t> b) noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
  return n;
}

/// Throws DimensionMismatch.
std::size_t hamming_distance(const Hypervector& a, const Hypervector& b);

/// Bipolar dot product, D - 2 * hamming. Throws DimensionMismatch.
long dot(const Hypervector& a, const Hypervector& b);

/// Hypervector with small signed integer components drawn from
/// {-2^(b-1), ..., -1, 1, ..., 2^(b-1)} for precision b in {1, 2, 3}.
struct MultiBitHypervector {
  unsigned precision_bits = 1;
  std::vector<std::int8_t> values;

  [[nodiscard]] std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const MultiBitHypervector&, const MultiBitHypervector&) = default;
};

}  // namespace hdoms
