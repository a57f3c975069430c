#pragma once

#include "hdoms/search.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace hdoms {

enum class FdrFormula : std::uint8_t {
  DecoysOverTargets,        // #decoys / max(1, #targets)
  DecoysPlusOneOverTargets  // (#decoys + 1) / max(1, #targets)
};

double fdr_estimate(std::size_t targets, std::size_t decoys, FdrFormula formula);

struct FdrResult {
  /// Smallest score meeting the threshold; int32 max when none does.
  std::int32_t score_threshold = std::numeric_limits<std::int32_t>::max();
  std::vector<ScoredMatch> accepted;  // targets only, ranking order
  std::size_t targets_above = 0;
  std::size_t decoys_above = 0;
  double achieved_fdr = 0.0;  // at score_threshold, or the best reachable FDR when none qualifies
  bool threshold_found = false;
};

/// Target-decoy filter over the best match of each query. Picks the smallest
/// score s with FDR(s) <= threshold and accepts the targets scoring >= s.
/// Throws DomainError unless 0 < threshold < 1.
FdrResult fdr_filter(std::span<const ScoredMatch> matches, double threshold,
                     FdrFormula formula = FdrFormula::DecoysOverTargets);

/// Rank-1 match of every query that has one.
std::vector<ScoredMatch> best_matches(const std::vector<std::vector<ScoredMatch>>& results);

struct FdrPoint {
  std::int32_t score = 0;
  std::size_t targets = 0;  // targets scoring >= score
  std::size_t decoys = 0;
  double fdr = 0.0;
  double q_value = 0.0;  // min FDR over all thresholds <= score
};

/// FDR at every distinct score, ascending by score.
std::vector<FdrPoint> fdr_curve(std::span<const ScoredMatch> matches,
                                FdrFormula formula = FdrFormula::DecoysOverTargets);

}  // namespace hdoms
