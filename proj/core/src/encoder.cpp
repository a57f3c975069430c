#include "hdoms/encoder.hpp"

#include "hdoms/error.hpp"
#include "hdoms/parallel.hpp"
#include "hdoms/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hdoms {

void EncoderConfig::validate() const {
  if (dim == 0 || dim % 64 != 0) throw ConfigError("dim must be a positive multiple of 64");
  if (levels < 1) throw ConfigError("levels (Q) must be positive");
  if (dim % (2 * levels) != 0) throw ConfigError("dim must be divisible by 2*Q");
  if (id_precision_bits < 1 || id_precision_bits > 3) throw ConfigError("id_precision_bits must be 1, 2 or 3");
  if (chunked) {
    if (chunk_count == 0 || dim % chunk_count != 0) throw ConfigError("chunk_count must divide dim");
    if (chunk_count % (2 * levels) != 0)
      throw ConfigError("chunked levels need chunk_count divisible by 2*Q so every level step flips whole chunks");
  }
}

// ---------------------------------------------------------------------------
// ID family

namespace {

// 16 components per 64-bit draw, 4 bits each: bit 0 is the sign, the next
// (precision - 1) bits the magnitude minus one.
inline std::int8_t id_component(std::uint64_t nibble, unsigned bits) noexcept {
  const int magnitude = static_cast<int>((nibble >> 1) & ((1U << (bits - 1)) - 1U)) + 1;
  return static_cast<std::int8_t>((nibble & 1U) ? magnitude : -magnitude);
}

void generate_id_row(std::uint64_t seed, std::size_t bin, unsigned bits, std::span<std::int8_t> out) {
  const CounterRng rng(seed, Stream::IdFamily, bin);
  const std::size_t dim = out.size();
  for (std::size_t block = 0; block * 16 < dim; ++block) {
    std::uint64_t w = rng.at(block);
    const std::size_t end = std::min(dim, block * 16 + 16);
    for (std::size_t d = block * 16; d < end; ++d, w >>= 4) out[d] = id_component(w & 0xF, bits);
  }
}

}  // namespace

IdFamily::IdFamily(std::size_t num_bins, const EncoderConfig& cfg, std::size_t budget_bytes)
    : num_bins_(num_bins), dim_(cfg.dim), bits_(cfg.id_precision_bits), seed_(cfg.seed) {
  cfg.validate();
  if (num_bins_ * dim_ <= budget_bytes) {
    table_.resize(num_bins_ * dim_);
    for (std::size_t b = 0; b < num_bins_; ++b)
      generate_id_row(seed_, b, bits_, {table_.data() + b * dim_, dim_});
  }
}

void IdFamily::fill_row(std::size_t bin, std::span<std::int8_t> out) const {
  if (bin >= num_bins_) throw MissingId("bin " + std::to_string(bin) + " has no ID hypervector (family size " + std::to_string(num_bins_) + ")");
  if (out.size() != dim_) throw DimensionMismatch("ID row buffer has wrong size");
  if (materialized()) {
    const auto r = row(bin);
    std::copy(r.begin(), r.end(), out.begin());
  } else {
    generate_id_row(seed_, bin, bits_, out);
  }
}

MultiBitHypervector IdFamily::operator[](std::size_t bin) const {
  MultiBitHypervector h;
  h.precision_bits = bits_;
  h.values.resize(dim_);
  fill_row(bin, h.values);
  return h;
}

IdFamily gen_id_family(std::size_t num_bins, const EncoderConfig& cfg) { return IdFamily(num_bins, cfg); }

// ---------------------------------------------------------------------------
// Level family

LevelFamily gen_level_family(const EncoderConfig& cfg) {
  cfg.validate();
  const std::size_t dim = cfg.dim;
  const std::size_t q = cfg.levels;

  LevelFamily fam;
  fam.levels = q;
  fam.chunked = cfg.chunked;
  fam.chunk_count = cfg.chunked ? cfg.chunk_count : 0;

  // Flip units are single dimensions, or whole chunks when chunked.
  const std::size_t units = cfg.chunked ? cfg.chunk_count : dim;
  const std::size_t unit_size = dim / units;
  const std::size_t units_per_step = units / (2 * q);

  const CounterRng base_rng(cfg.seed, Stream::LevelBase);
  Hypervector current(dim);
  for (std::size_t u = 0; u < units; ++u) {
    const bool positive = (base_rng.at(u / 64) >> (u % 64)) & 1U;
    if (positive)
      for (std::size_t d = u * unit_size; d < (u + 1) * unit_size; ++d) current.set(d, 1);
  }

  // Fisher-Yates permutation of the flip units; level j flips the j-th block.
  std::vector<std::size_t> order(units);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng perm_rng(cfg.seed, Stream::LevelFlips);
  for (std::size_t i = units; i > 1; --i) std::swap(order[i - 1], order[perm_rng.below(i)]);

  fam.vectors.reserve(q);
  fam.vectors.push_back(current);
  for (std::size_t j = 1; j < q; ++j) {
    for (std::size_t k = (j - 1) * units_per_step; k < j * units_per_step; ++k) {
      const std::size_t u = order[k];
      for (std::size_t d = u * unit_size; d < (u + 1) * unit_size; ++d) current.flip(d);
    }
    fam.vectors.push_back(current);
  }

  fam.sign_masks.resize(q * dim);
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t d = 0; d < dim; ++d)
      fam.sign_masks[j * dim + d] = fam.vectors[j].get(d) > 0 ? 0 : -1;
  return fam;
}

// ---------------------------------------------------------------------------
// Encoding

std::size_t quantize_intensity(double intensity, std::size_t levels) {
  if (!(intensity >= 0.0 && intensity <= 1.0))
    throw DomainError("normalized intensity must be in [0, 1], got " + std::to_string(intensity));
  if (levels == 0) throw DomainError("levels must be positive");
  const auto level = static_cast<std::size_t>(std::floor(intensity * static_cast<double>(levels)));
  return std::min(level, levels - 1);
}

std::vector<EncodeTerm> quantize_terms(const BinnedVector& v, std::size_t levels) {
  std::vector<EncodeTerm> terms;
  terms.reserve(v.bins.size());
  const double max_intensity = v.max_intensity();
  if (max_intensity <= 0.0) return terms;
  for (const auto& [idx, value] : v.bins) {
    const double normalized = std::min(1.0, value / max_intensity);
    terms.push_back({idx, static_cast<std::uint32_t>(quantize_intensity(normalized, levels))});
  }
  return terms;
}

namespace {

template <typename Acc>
void accumulate_into(std::span<const EncodeTerm> terms, const IdFamily& ids, const LevelFamily& lv,
                     std::span<Acc> acc, std::vector<std::int8_t>& scratch) {
  const std::size_t dim = ids.dim();
  std::fill(acc.begin(), acc.end(), Acc{0});
  for (const auto& t : terms) {
    if (t.bin >= ids.size())
      throw MissingId("bin " + std::to_string(t.bin) + " has no ID hypervector (family size " +
                      std::to_string(ids.size()) + ")");
    const std::int8_t* id;
    if (ids.materialized()) {
      id = ids.row(t.bin).data();
    } else {
      scratch.resize(dim);
      ids.fill_row(t.bin, scratch);
      id = scratch.data();
    }
    const std::int8_t* mask = lv.mask(t.level).data();
    Acc* a = acc.data();
    for (std::size_t d = 0; d < dim; ++d)
      a[d] = static_cast<Acc>(a[d] + ((id[d] ^ mask[d]) - mask[d]));
  }
}

template <typename Acc>
Hypervector sign_pack(std::span<const Acc> acc) {
  Hypervector h(acc.size());
  auto words = h.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = 0;
    const Acc* a = acc.data() + w * 64;
    for (unsigned b = 0; b < 64; ++b) bits |= static_cast<std::uint64_t>(a[b] >= 0) << b;
    words[w] = bits;
  }
  return h;
}

void check_dims(const IdFamily& ids, const LevelFamily& lv) {
  if (lv.vectors.empty() || lv.vectors.front().dim() != ids.dim())
    throw DimensionMismatch("ID and level families have different dimensions");
}

}  // namespace

std::vector<std::int32_t> accumulate_terms(std::span<const EncodeTerm> terms, const IdFamily& ids,
                                           const LevelFamily& lv) {
  check_dims(ids, lv);
  std::vector<std::int32_t> acc(ids.dim());
  std::vector<std::int8_t> scratch;
  accumulate_into<std::int32_t>(terms, ids, lv, acc, scratch);
  return acc;
}

Hypervector sign_quantize(std::span<const std::int32_t> sums) { return sign_pack<std::int32_t>(sums); }

Hypervector encode(const BinnedVector& v, const IdFamily& ids, const LevelFamily& lv,
                   const EncoderConfig& cfg) {
  check_dims(ids, lv);
  if (ids.dim() != cfg.dim) throw DimensionMismatch("families do not match encoder dimension");
  const auto terms = quantize_terms(v, lv.levels);
  std::vector<std::int8_t> scratch;
  // 16-bit accumulators halve the memory traffic whenever the sum cannot overflow.
  if (terms.size() * static_cast<std::size_t>(ids.max_magnitude()) <=
      static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max())) {
    std::vector<std::int16_t> acc(cfg.dim);
    accumulate_into<std::int16_t>(terms, ids, lv, std::span<std::int16_t>(acc), scratch);
    return sign_pack<std::int16_t>(acc);
  }
  std::vector<std::int32_t> acc(cfg.dim);
  accumulate_into<std::int32_t>(terms, ids, lv, std::span<std::int32_t>(acc), scratch);
  return sign_pack<std::int32_t>(acc);
}

Encoder::Encoder(const EncoderConfig& cfg, const BinConfig& bins)
    : cfg_(cfg), bins_(bins), ids_((bins.validate(), bins.num_bins()), cfg), levels_(gen_level_family(cfg)) {}

Hypervector Encoder::encode(const BinnedVector& v) const { return hdoms::encode(v, ids_, levels_, cfg_); }

Hypervector Encoder::encode(const Spectrum& preprocessed) const { return encode(bin(preprocessed, bins_)); }

std::vector<Hypervector> Encoder::encode_batch(std::span<const Spectrum> preprocessed, unsigned threads) const {
  std::vector<Hypervector> out(preprocessed.size());
  parallel_for(preprocessed.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = encode(preprocessed[i]);
  });
  return out;
}

}  // namespace hdoms
