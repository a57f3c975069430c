#pragma once

#include "hdoms/spectrum.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hdoms {

/// Produces one decoy per target. Implementations must be deterministic: the
/// decoy of target i depends only on (target, i, seed).
class DecoyGenerator {
public:
  virtual ~DecoyGenerator() = default;
  [[nodiscard]] virtual Spectrum make_decoy(const Spectrum& target, std::uint64_t index) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// Shifts every peak by the same pseudo-random offset in [min_shift, max_shift)
/// Da, wrapping m/z values cyclically within [min_mz, max_mz). Intensities and
/// the precursor are preserved; the id gets a "DECOY_" prefix.
class CyclicShiftDecoys final : public DecoyGenerator {
public:
  struct Options {
    double min_mz = 50.5;
    double max_mz = 2500.0;
    double min_shift = 10.0;
    double max_shift = 50.0;
    std::uint64_t seed = 1;
  };

  explicit CyclicShiftDecoys(Options options);

  [[nodiscard]] Spectrum make_decoy(const Spectrum& target, std::uint64_t index) const override;
  [[nodiscard]] std::string name() const override { return "cyclic_shift"; }
  /// Offset used for target `index`.
  [[nodiscard]] double shift(std::uint64_t index) const;

private:
  Options opt_;
};

inline constexpr const char* kDecoyPrefix = "DECOY_";

/// One decoy per reference, in reference order (decoy i belongs to reference
/// first_index + i). Throws DomainError for an empty reference list.
std::vector<Spectrum> generate_decoys(std::span<const Spectrum> references, const DecoyGenerator& generator,
                                      std::uint64_t first_index = 0);

/// Cyclic-shift decoys over the default m/z range.
std::vector<Spectrum> generate_decoys(std::span<const Spectrum> references, std::uint64_t seed);

}  // namespace hdoms
