#include "hdoms/synthetic.hpp"

#include "hdoms/error.hpp"
#include "hdoms/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hdoms {

namespace {

constexpr std::uint64_t kQuerySubstream = std::uint64_t{1} << 40;
constexpr std::uint64_t kFamilySubstream = std::uint64_t{1} << 41;

bool is_rate(double v) { return v >= 0.0 && v <= 1.0; }

std::vector<Peak> random_peaks(CounterRng& rng, std::size_t count, const SyntheticBenchSpec& spec) {
  std::vector<Peak> peaks(count);
  for (auto& p : peaks) {
    p.mz = rng.uniform(spec.min_mz, spec.max_mz);
    p.intensity = std::exp(rng.normal());
  }
  return peaks;
}

void sort_by_mz(std::vector<Peak>& peaks) {
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    return a.mz != b.mz ? a.mz < b.mz : a.intensity < b.intensity;
  });
}

}  // namespace

void SyntheticBenchSpec::validate() const {
  if (library_size == 0) throw ConfigError("library_size must be positive");
  if (min_peaks == 0 || max_peaks < min_peaks) throw ConfigError("peak count range is invalid");
  if (!(max_mz > min_mz) || !(min_mz > 0.0)) throw ConfigError("m/z range is invalid");
  if (!(max_precursor >= min_precursor) || !(min_precursor > 0.0)) throw ConfigError("precursor range is invalid");
  if (family_size == 0) throw ConfigError("family_size must be at least 1");
  for (const double r : {family_shared_fraction, peak_dropout, modified_fraction, mod_peak_fraction})
    if (!is_rate(r)) throw ConfigError("synthetic rates must lie in [0, 1]");
  if (!(intensity_jitter >= 0.0) || !(mz_jitter >= 0.0) || !(max_mod_mass >= 0.0))
    throw ConfigError("jitter and modification magnitudes must be non-negative");
}

SyntheticBench generate_synthetic_bench(const SyntheticBenchSpec& spec) {
  spec.validate();
  SyntheticBench bench;
  bench.library.resize(spec.library_size);

  for (std::size_t i = 0; i < spec.library_size; ++i) {
    CounterRng rng(spec.seed, Stream::Synthetic, i);
    const std::size_t count = spec.min_peaks + rng.below(spec.max_peaks - spec.min_peaks + 1);
    std::vector<Peak> peaks;
    const std::size_t family = i / spec.family_size;
    if (spec.family_size > 1 && spec.family_shared_fraction > 0.0) {
      // Shared peaks come from the family's own stream, so every member draws the same ones.
      CounterRng fam(spec.seed, Stream::Synthetic, kFamilySubstream + family);
      const auto shared = static_cast<std::size_t>(std::round(spec.family_shared_fraction * static_cast<double>(count)));
      peaks = random_peaks(fam, shared, spec);
    }
    auto own = random_peaks(rng, count - peaks.size(), spec);
    peaks.insert(peaks.end(), own.begin(), own.end());
    sort_by_mz(peaks);

    Spectrum& s = bench.library[i];
    s.id = "ref_" + std::to_string(i);
    s.precursor_mass = rng.uniform(spec.min_precursor, spec.max_precursor);
    s.precursor_charge = 2 + static_cast<int>(rng.below(2));
    s.peaks = std::move(peaks);
  }

  bench.queries.resize(spec.query_count);
  bench.truth.resize(spec.query_count);
  for (std::size_t j = 0; j < spec.query_count; ++j) {
    CounterRng rng(spec.seed, Stream::Synthetic, kQuerySubstream + j);
    const auto truth = static_cast<std::uint32_t>(rng.below(spec.library_size));
    const Spectrum& ref = bench.library[truth];
    bench.truth[j] = truth;

    const bool modified = rng.uniform() < spec.modified_fraction;
    const double delta = modified ? rng.uniform(-spec.max_mod_mass, spec.max_mod_mass) : 0.0;

    Spectrum q;
    q.id = "query_" + std::to_string(j);
    q.precursor_charge = ref.precursor_charge;
    q.precursor_mass = std::max(1.0, ref.precursor_mass + delta);
    for (const auto& p : ref.peaks) {
      if (rng.uniform() < spec.peak_dropout) continue;
      Peak np = p;
      if (modified && rng.uniform() < spec.mod_peak_fraction) np.mz += delta;
      np.mz += spec.mz_jitter * rng.normal();
      np.intensity *= std::exp(spec.intensity_jitter * rng.normal());
      if (np.mz > 0.0) q.peaks.push_back(np);
    }
    // Keep at least a few peaks so the query survives preprocessing.
    if (q.peaks.size() < spec.min_peaks / 2 + 1) {
      q.peaks.clear();
      for (const auto& p : ref.peaks) q.peaks.push_back(p);
    }
    auto noise = random_peaks(rng, spec.noise_peaks, spec);
    for (auto& p : noise) p.intensity *= 0.5;
    q.peaks.insert(q.peaks.end(), noise.begin(), noise.end());
    sort_by_mz(q.peaks);
    bench.queries[j] = std::move(q);
  }
  return bench;
}

}  // namespace hdoms
