#pragma once

#include "hdoms/hypervector.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace hdoms {

inline constexpr double kOpenWindow = 500.0;      // Da, open modification search
inline constexpr double kStandardWindow = 0.05;   // Da, standard search
inline constexpr double kNoWindow = std::numeric_limits<double>::infinity();

struct ScoredMatch {
  std::uint32_t query_id = 0;
  std::uint32_t reference_id = 0;
  std::int32_t similarity = 0;  // bipolar dot product in [-D, D]
  bool is_decoy = false;

  friend bool operator==(const ScoredMatch&, const ScoredMatch&) = default;
};

/// Ranking order: higher similarity first, then lower reference id.
inline bool ranks_before(const ScoredMatch& a, const ScoredMatch& b) noexcept {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.reference_id < b.reference_id;
}

/// A contiguous run of references in mass order.
struct CandidateView {
  std::size_t dim = 0;
  std::span<const std::uint64_t> words;       // rows * (dim / 64)
  std::span<const std::uint32_t> reference_ids;
  std::span<const std::uint8_t> decoy_flags;

  [[nodiscard]] std::size_t size() const noexcept { return reference_ids.size(); }
};

/// Packed reference hypervectors sorted by precursor mass.
///
/// Reference ids are the insertion order; `reference_id(pos)` maps a sorted
/// position back to it. Immutable once built except through mutable_words(),
/// which exists for fault injection.
class ReferenceIndex {
public:
  ReferenceIndex() = default;
  ReferenceIndex(std::span<const Hypervector> vectors, std::span<const double> masses,
                 std::span<const std::uint8_t> decoy_flags);

  /// Builds from rows already packed in insertion order (words.size() ==
  /// count * dim / 64). Rows are sorted in place, so no second copy is made.
  static ReferenceIndex from_packed(std::size_t dim, std::vector<std::uint64_t> words, std::vector<double> masses,
                                    std::vector<std::uint8_t> decoy_flags);

  [[nodiscard]] std::size_t size() const noexcept { return masses_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t words_per_row() const noexcept { return dim_ / 64; }

  [[nodiscard]] std::span<const double> masses() const noexcept { return masses_; }
  [[nodiscard]] std::uint32_t reference_id(std::size_t pos) const noexcept { return ids_[pos]; }
  [[nodiscard]] bool is_decoy(std::size_t pos) const noexcept { return decoys_[pos] != 0; }
  [[nodiscard]] std::span<const std::uint64_t> row(std::size_t pos) const noexcept {
    return {words_.data() + pos * words_per_row(), words_per_row()};
  }
  [[nodiscard]] std::span<std::uint64_t> mutable_words() noexcept { return words_; }
  [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }

  /// Sorted positions [begin, end) as a candidate view.
  [[nodiscard]] CandidateView view(std::size_t begin, std::size_t end) const;
  [[nodiscard]] CandidateView all() const { return view(0, size()); }

private:
  std::size_t dim_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<double> masses_;
  std::vector<std::uint32_t> ids_;
  std::vector<std::uint8_t> decoys_;
};

struct CandidateRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
};

/// References with |mass - query_mass| <= window, by binary search. Throws DomainError for window < 0.
CandidateRange candidate_range(const ReferenceIndex& index, double query_mass, double window);

/// Exhaustive XOR/popcount scoring of all candidates; top min(k, |candidates|)
/// matches in ranking order. Throws DimensionMismatch, DomainError for k == 0.
std::vector<ScoredMatch> hamming_topk(const Hypervector& query, const CandidateView& candidates,
                                      std::size_t k, std::uint32_t query_id = 0);

/// Keeps the best k of arbitrary scored matches, in ranking order.
std::vector<ScoredMatch> select_topk(std::vector<ScoredMatch> matches, std::size_t k);

struct SearchParams {
  double window = kOpenWindow;
  std::size_t k = 1;
  unsigned threads = 0;  // 0 = all cores
};

/// Per-query top-k within the mass window, in query order. Deterministic for
/// any thread count.
std::vector<std::vector<ScoredMatch>> batch_search(std::span<const Hypervector> queries,
                                                   std::span<const double> query_masses,
                                                   const ReferenceIndex& index, const SearchParams& params);

/// Results CSV: query_id,rank,reference_id,similarity,is_decoy (rank is 1-based).
void write_results_csv(std::ostream& out, const std::vector<std::vector<ScoredMatch>>& results,
                       std::span<const std::string> query_names, std::span<const std::string> reference_names);

}  // namespace hdoms
