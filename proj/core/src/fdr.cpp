#include "hdoms/fdr.hpp"

#include "hdoms/error.hpp"

#include <algorithm>

namespace hdoms {

double fdr_estimate(std::size_t targets, std::size_t decoys, FdrFormula formula) {
  const double num = static_cast<double>(decoys) + (formula == FdrFormula::DecoysPlusOneOverTargets ? 1.0 : 0.0);
  return num / static_cast<double>(std::max<std::size_t>(1, targets));
}

std::vector<FdrPoint> fdr_curve(std::span<const ScoredMatch> matches, FdrFormula formula) {
  std::vector<std::int32_t> scores;
  scores.reserve(matches.size());
  for (const auto& m : matches) scores.push_back(m.similarity);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

  // Sweep from the highest score down, accumulating counts.
  std::vector<ScoredMatch> sorted(matches.begin(), matches.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredMatch& a, const ScoredMatch& b) { return a.similarity > b.similarity; });
  std::vector<FdrPoint> curve(scores.size());
  std::size_t pos = 0;
  std::size_t targets = 0;
  std::size_t decoys = 0;
  for (std::size_t i = scores.size(); i-- > 0;) {
    while (pos < sorted.size() && sorted[pos].similarity >= scores[i]) {
      (sorted[pos].is_decoy ? decoys : targets) += 1;
      ++pos;
    }
    curve[i] = {scores[i], targets, decoys, fdr_estimate(targets, decoys, formula), 0.0};
  }
  double running = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    running = i == 0 ? curve[i].fdr : std::min(running, curve[i].fdr);
    curve[i].q_value = running;
  }
  return curve;
}

FdrResult fdr_filter(std::span<const ScoredMatch> matches, double threshold, FdrFormula formula) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw DomainError("FDR threshold must lie in (0, 1)");
  FdrResult result;
  const auto curve = fdr_curve(matches, formula);
  if (curve.empty()) return result;

  const auto it = std::find_if(curve.begin(), curve.end(), [&](const FdrPoint& p) { return p.fdr <= threshold; });
  if (it == curve.end()) {
    result.achieved_fdr = curve.front().q_value;
    for (const auto& p : curve) result.achieved_fdr = std::min(result.achieved_fdr, p.fdr);
    return result;
  }
  result.threshold_found = true;
  result.score_threshold = it->score;
  result.targets_above = it->targets;
  result.decoys_above = it->decoys;
  result.achieved_fdr = it->fdr;
  for (const auto& m : matches)
    if (!m.is_decoy && m.similarity >= it->score) result.accepted.push_back(m);
  std::sort(result.accepted.begin(), result.accepted.end(), [](const ScoredMatch& a, const ScoredMatch& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.query_id < b.query_id;
  });
  return result;
}

std::vector<ScoredMatch> best_matches(const std::vector<std::vector<ScoredMatch>>& results) {
  std::vector<ScoredMatch> out;
  out.reserve(results.size());
  for (const auto& r : results)
    if (!r.empty()) out.push_back(r.front());
  return out;
}

}  // namespace hdoms
