#include "hdoms/hypervector.hpp"

#include "hdoms/error.hpp"

#include <algorithm>
#include <string>

namespace hdoms {

Hypervector::Hypervector(std::size_t dim) : dim_(dim), words_(dim / 64, 0) {
  if (dim % 64 != 0) throw DimensionMismatch("hypervector dimension must be a multiple of 64, got " + std::to_string(dim));
}

Hypervector Hypervector::from_bipolar(std::span<const std::int8_t> values) {
  Hypervector h(values.size());
  for (std::size_t d = 0; d < values.size(); ++d)
    if (values[d] > 0) h.words_[d >> 6] |= std::uint64_t{1} << (d & 63);
  return h;
}

Hypervector Hypervector::from_words(std::size_t dim, std::span<const std::uint64_t> words) {
  Hypervector h(dim);
  if (words.size() != h.words_.size())
    throw DimensionMismatch("word count " + std::to_string(words.size()) + " does not match dimension " + std::to_string(dim));
  std::copy(words.begin(), words.end(), h.words_.begin());
  return h;
}

std::vector<std::int8_t> Hypervector::to_bipolar() const {
  std::vector<std::int8_t> out(dim_);
  for (std::size_t d = 0; d < dim_; ++d) out[d] = static_cast<std::int8_t>(get(d));
  return out;
}

std::size_t hamming_distance(const Hypervector& a, const Hypervector& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("dimensions differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  return hamming_words(a.words(), b.words());
}

long dot(const Hypervector& a, const Hypervector& b) {
  return static_cast<long>(a.dim()) - 2 * static_cast<long>(hamming_distance(a, b));
}

}  // namespace hdoms
