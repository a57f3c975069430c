#include "hdoms/spectrum.hpp"

#include "hdoms/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hdoms {

void PreprocessConfig::validate() const {
  if (!(threshold_fraction >= 0.0 && threshold_fraction < 1.0))
    throw ConfigError("threshold_fraction must be in [0, 1)");
  if (max_peaks == 0) throw ConfigError("max_peaks must be positive");
  if (min_peaks > max_peaks) throw ConfigError("min_peaks must not exceed max_peaks");
}

namespace {

// Sort ascending by m/z and merge peaks sharing the same m/z.
void sort_and_merge(std::vector<Peak>& peaks) {
  std::sort(peaks.begin(), peaks.end(),
            [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (out > 0 && peaks[out - 1].mz == peaks[i].mz) {
      peaks[out - 1].intensity += peaks[i].intensity;
    } else {
      peaks[out++] = peaks[i];
    }
  }
  peaks.resize(out);
}

}  // namespace

Spectrum preprocess(const Spectrum& spectrum, const PreprocessConfig& cfg) {
  Spectrum out = spectrum;
  auto& peaks = out.peaks;

  std::erase_if(peaks, [](const Peak& p) { return !(p.mz > 0.0) || !(p.intensity > 0.0); });
  if (peaks.empty()) throw EmptySpectrum("spectrum '" + spectrum.id + "' has no positive peaks");

  sort_and_merge(peaks);

  const double max_intensity =
      std::max_element(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        return a.intensity < b.intensity;
      })->intensity;
  const double threshold = cfg.threshold_fraction * max_intensity;
  std::erase_if(peaks, [threshold](const Peak& p) { return p.intensity < threshold; });

  if (peaks.size() > cfg.max_peaks) {
    // Most intense first; equal intensities keep the lower m/z.
    std::nth_element(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(cfg.max_peaks),
                     peaks.end(), [](const Peak& a, const Peak& b) {
                       if (a.intensity != b.intensity) return a.intensity > b.intensity;
                       return a.mz < b.mz;
                     });
    peaks.resize(cfg.max_peaks);
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
  }

  if (peaks.size() < cfg.min_peaks)
    throw EmptySpectrum("spectrum '" + spectrum.id + "' keeps " + std::to_string(peaks.size()) +
                        " peaks, fewer than min_peaks=" + std::to_string(cfg.min_peaks));

  if (cfg.transform == IntensityTransform::Sqrt && out.scale == IntensityScale::Raw) {
    for (auto& p : peaks) p.intensity = std::sqrt(p.intensity);
    out.scale = IntensityScale::Sqrt;
  }

  if (cfg.l2_normalize) {
    const double norm = std::sqrt(std::accumulate(
        peaks.begin(), peaks.end(), 0.0,
        [](double acc, const Peak& p) { return acc + p.intensity * p.intensity; }));
    // Already unit length (within rounding): leave untouched so a second pass is a no-op.
    if (norm > 0.0 && std::abs(norm - 1.0) > 1e-12)
      for (auto& p : peaks) p.intensity /= norm;
  }
  return out;
}

std::optional<Spectrum> try_preprocess(const Spectrum& spectrum, const PreprocessConfig& cfg) {
  try {
    return preprocess(spectrum, cfg);
  } catch (const EmptySpectrum&) {
    return std::nullopt;
  }
}

std::size_t BinConfig::num_bins() const {
  return static_cast<std::size_t>(std::ceil((max_mz - min_mz) / bin_width - 1e-9));
}

void BinConfig::validate() const {
  if (!(bin_width > 0.0)) throw ConfigError("bin_width must be positive");
  if (!(min_mz >= 0.0) || !(max_mz > min_mz)) throw ConfigError("mz range must satisfy 0 <= min_mz < max_mz");
  if (num_bins() > (std::size_t{1} << 31)) throw ConfigError("bin count exceeds 2^31");
}

double BinnedVector::max_intensity() const {
  double m = 0.0;
  for (const auto& [idx, v] : bins) m = std::max(m, v);
  return m;
}

double BinnedVector::total_intensity() const {
  double s = 0.0;
  for (const auto& [idx, v] : bins) s += v;
  return s;
}

BinnedVector bin(const Spectrum& spectrum, const BinConfig& cfg) {
  cfg.validate();
  BinnedVector out;
  out.spectrum_id = spectrum.id;
  out.bin_width = cfg.bin_width;
  out.min_mz = cfg.min_mz;
  out.max_mz = cfg.max_mz;

  const std::size_t n_bins = cfg.num_bins();
  std::vector<std::pair<std::uint32_t, double>> entries;
  entries.reserve(spectrum.peaks.size());
  for (const auto& p : spectrum.peaks) {
    if (!(p.intensity > 0.0)) continue;
    if (p.mz < cfg.min_mz || p.mz >= cfg.max_mz) {
      ++out.dropped;
      continue;
    }
    const auto idx = static_cast<std::size_t>(std::floor((p.mz - cfg.min_mz) / cfg.bin_width));
    if (idx >= n_bins) {
      ++out.dropped;
      continue;
    }
    entries.emplace_back(static_cast<std::uint32_t>(idx), p.intensity);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& e : entries) {
    if (!out.bins.empty() && out.bins.back().first == e.first) {
      out.bins.back().second += e.second;
    } else {
      out.bins.push_back(e);
    }
  }
  return out;
}

}  // namespace hdoms
