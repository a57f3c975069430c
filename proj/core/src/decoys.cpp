#include "hdoms/decoys.hpp"

#include "hdoms/error.hpp"
#include "hdoms/rng.hpp"

#include <algorithm>
#include <cmath>

namespace hdoms {

CyclicShiftDecoys::CyclicShiftDecoys(Options options) : opt_(options) {
  if (!(opt_.max_mz > opt_.min_mz)) throw ConfigError("decoy m/z range is empty");
  if (!(opt_.min_shift >= 0.0) || !(opt_.max_shift >= opt_.min_shift))
    throw ConfigError("decoy shift range is invalid");
}

double CyclicShiftDecoys::shift(std::uint64_t index) const {
  CounterRng rng(opt_.seed, Stream::Decoys, index);
  return rng.uniform(opt_.min_shift, opt_.max_shift);
}

Spectrum CyclicShiftDecoys::make_decoy(const Spectrum& target, std::uint64_t index) const {
  const double span = opt_.max_mz - opt_.min_mz;
  const double offset = shift(index);
  Spectrum decoy = target;
  decoy.id = kDecoyPrefix + target.id;
  decoy.is_decoy = true;
  for (auto& p : decoy.peaks) {
    double x = std::fmod(p.mz - opt_.min_mz + offset, span);
    if (x < 0.0) x += span;
    p.mz = opt_.min_mz + x;
    if (p.mz >= opt_.max_mz) p.mz = opt_.min_mz;  // fmod rounding at the upper edge
  }
  std::stable_sort(decoy.peaks.begin(), decoy.peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
  return decoy;
}

std::vector<Spectrum> generate_decoys(std::span<const Spectrum> references, const DecoyGenerator& generator,
                                      std::uint64_t first_index) {
  if (references.empty()) throw DomainError("cannot generate decoys for an empty library");
  std::vector<Spectrum> out;
  out.reserve(references.size());
  for (std::size_t i = 0; i < references.size(); ++i) out.push_back(generator.make_decoy(references[i], first_index + i));
  return out;
}

std::vector<Spectrum> generate_decoys(std::span<const Spectrum> references, std::uint64_t seed) {
  CyclicShiftDecoys::Options opt;
  opt.seed = seed;
  return generate_decoys(references, CyclicShiftDecoys(opt));
}

}  // namespace hdoms
