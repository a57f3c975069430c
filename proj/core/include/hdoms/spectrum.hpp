#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hdoms {

/// Proton mass in Dalton, used to convert precursor m/z to neutral mass.
inline constexpr double kProtonMass = 1.007276466812;

struct Peak {
  double mz = 0.0;         // Thomson, > 0
  double intensity = 0.0;  // arbitrary units, >= 0

  friend bool operator==(const Peak&, const Peak&) = default;
};

/// Scale the intensities of a spectrum are currently expressed in. Tracked so
/// that preprocessing never applies the square-root transform twice.
enum class IntensityScale : std::uint8_t { Raw, Sqrt };

struct Spectrum {
  std::string id;
  double precursor_mass = 0.0;  // neutral mass, Dalton
  int precursor_charge = 1;
  std::vector<Peak> peaks;
  bool is_decoy = false;
  IntensityScale scale = IntensityScale::Raw;

  friend bool operator==(const Spectrum&, const Spectrum&) = default;
};

enum class IntensityTransform : std::uint8_t { Raw, Sqrt };

struct PreprocessConfig {
  double threshold_fraction = 0.01;  // of the most intense peak
  std::size_t min_peaks = 5;
  std::size_t max_peaks = 150;
  IntensityTransform transform = IntensityTransform::Sqrt;
  bool l2_normalize = true;

  void validate() const;
};

/// Filters noise peaks, caps the peak count and rescales intensities.
/// Throws EmptySpectrum when the spectrum has no positive peak or fewer than
/// min_peaks survive.
Spectrum preprocess(const Spectrum& spectrum, const PreprocessConfig& cfg);

/// Same as preprocess, returning nullopt instead of throwing EmptySpectrum.
std::optional<Spectrum> try_preprocess(const Spectrum& spectrum, const PreprocessConfig& cfg);

struct BinConfig {
  double bin_width = 0.05;
  double min_mz = 50.5;
  double max_mz = 2500.0;

  [[nodiscard]] std::size_t num_bins() const;
  void validate() const;
};

/// Sparse intensity-per-bin vector. `bins` is sorted by bin index and holds
/// strictly positive intensities only.
struct BinnedVector {
  std::string spectrum_id;
  std::vector<std::pair<std::uint32_t, double>> bins;
  double bin_width = 0.0;
  double min_mz = 0.0;
  double max_mz = 0.0;
  std::size_t dropped = 0;  // peaks outside [min_mz, max_mz)

  [[nodiscard]] double max_intensity() const;
  [[nodiscard]] double total_intensity() const;
};

BinnedVector bin(const Spectrum& spectrum, const BinConfig& cfg);

}  // namespace hdoms
