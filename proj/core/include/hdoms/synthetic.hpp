#pragma once

#include "hdoms/spectrum.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hdoms {

/// Parameters of the synthetic retrieval benchmark. Each query is a perturbed
/// copy of one library spectrum, which is its ground-truth match.
struct SyntheticBenchSpec {
  std::size_t library_size = 100000;
  std::size_t query_count = 1000;
  std::size_t min_peaks = 30;
  std::size_t max_peaks = 80;
  double min_mz = 100.0;
  double max_mz = 2000.0;
  double min_precursor = 500.0;
  double max_precursor = 3500.0;
  /// Library spectra come in families whose members share a fraction of their
  /// peaks, which makes near neighbours harder to tell apart. 1 disables it.
  /// The defaults keep clean retrieval just below saturation.
  std::size_t family_size = 10;
  double family_shared_fraction = 0.9;

  double peak_dropout = 0.2;        // probability a query loses a peak
  double intensity_jitter = 0.2;    // sigma of the log-normal intensity factor
  double mz_jitter = 0.005;         // Da, Gaussian sigma
  double modified_fraction = 0.5;   // share of queries carrying a modification
  double mod_peak_fraction = 0.3;   // share of peaks the modification shifts
  double max_mod_mass = 100.0;      // |delta mass| drawn uniformly below this
  std::size_t noise_peaks = 5;      // random peaks added to each query
  std::uint64_t seed = 1;

  /// Throws ConfigError: rates outside [0, 1], empty ranges.
  void validate() const;
};

struct SyntheticBench {
  std::vector<Spectrum> library;   // targets only, ids "ref_<i>"
  std::vector<Spectrum> queries;   // ids "query_<j>"
  std::vector<std::uint32_t> truth;  // library index each query was derived from
};

/// Deterministic in the spec: the same spec always yields the same spectra.
SyntheticBench generate_synthetic_bench(const SyntheticBenchSpec& spec);

}  // namespace hdoms
