#include "hdoms/search.hpp"

#include "hdoms/error.hpp"
#include "hdoms/parallel.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace hdoms {

ReferenceIndex::ReferenceIndex(std::span<const Hypervector> vectors, std::span<const double> masses,
                               std::span<const std::uint8_t> decoy_flags) {
  if (vectors.size() != masses.size() || vectors.size() != decoy_flags.size())
    throw DimensionMismatch("reference vectors, masses and decoy flags differ in length");
  if (vectors.size() > std::numeric_limits<std::uint32_t>::max())
    throw DomainError("too many references for 32-bit ids");
  dim_ = vectors.empty() ? 0 : vectors.front().dim();

  std::vector<std::uint32_t> order(vectors.size());
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return masses[a] < masses[b]; });

  const std::size_t wpr = dim_ / 64;
  words_.resize(vectors.size() * wpr);
  masses_.resize(vectors.size());
  ids_ = order;
  decoys_.resize(vectors.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& v = vectors[order[pos]];
    if (v.dim() != dim_) throw DimensionMismatch("reference hypervectors differ in dimension");
    std::copy(v.words().begin(), v.words().end(), words_.begin() + static_cast<std::ptrdiff_t>(pos * wpr));
    masses_[pos] = masses[order[pos]];
    decoys_[pos] = decoy_flags[order[pos]];
  }
}

ReferenceIndex ReferenceIndex::from_packed(std::size_t dim, std::vector<std::uint64_t> words,
                                           std::vector<double> masses, std::vector<std::uint8_t> decoy_flags) {
  if (dim % 64 != 0) throw DimensionMismatch("dimension must be a multiple of 64");
  const std::size_t n = masses.size();
  const std::size_t wpr = dim / 64;
  if (decoy_flags.size() != n || words.size() != n * wpr)
    throw DimensionMismatch("packed words, masses and decoy flags differ in length");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw DomainError("too many references for 32-bit ids");

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return masses[a] < masses[b]; });

  // Cycle-following permutation: position p receives row order[p].
  std::vector<bool> done(n, false);
  std::vector<std::uint64_t> tmp(wpr);
  for (std::size_t start = 0; start < n; ++start) {
    if (done[start]) continue;
    std::copy_n(words.begin() + static_cast<std::ptrdiff_t>(start * wpr), wpr, tmp.begin());
    std::size_t pos = start;
    while (true) {
      done[pos] = true;
      const std::size_t src = order[pos];
      auto dst = words.begin() + static_cast<std::ptrdiff_t>(pos * wpr);
      if (src == start) {
        std::copy(tmp.begin(), tmp.end(), dst);
        break;
      }
      std::copy_n(words.begin() + static_cast<std::ptrdiff_t>(src * wpr), wpr, dst);
      pos = src;
    }
  }

  ReferenceIndex idx;
  idx.dim_ = dim;
  idx.words_ = std::move(words);
  idx.masses_.resize(n);
  idx.decoys_.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    idx.masses_[p] = masses[order[p]];
    idx.decoys_[p] = decoy_flags[order[p]];
  }
  idx.ids_ = std::move(order);
  return idx;
}

CandidateView ReferenceIndex::view(std::size_t begin, std::size_t end) const {
  const std::size_t wpr = words_per_row();
  return CandidateView{dim_,
                       std::span<const std::uint64_t>(words_).subspan(begin * wpr, (end - begin) * wpr),
                       std::span<const std::uint32_t>(ids_).subspan(begin, end - begin),
                       std::span<const std::uint8_t>(decoys_).subspan(begin, end - begin)};
}

CandidateRange candidate_range(const ReferenceIndex& index, double query_mass, double window) {
  if (!(window >= 0.0)) throw DomainError("mass window must be non-negative");
  const auto m = index.masses();
  // Predicates are written exactly as |mass - query| <= window splits, so the
  // result agrees with a linear filter even at floating-point boundaries.
  const auto first = std::partition_point(m.begin(), m.end(),
                                          [&](double mass) { return query_mass - mass > window; });
  const auto last = std::partition_point(first, m.end(),
                                         [&](double mass) { return mass - query_mass <= window; });
  return {static_cast<std::size_t>(first - m.begin()), static_cast<std::size_t>(last - m.begin())};
}

std::vector<ScoredMatch> select_topk(std::vector<ScoredMatch> matches, std::size_t k) {
  const std::size_t keep = std::min(k, matches.size());
  std::partial_sort(matches.begin(), matches.begin() + static_cast<std::ptrdiff_t>(keep), matches.end(),
                    ranks_before);
  matches.resize(keep);
  return matches;
}

std::vector<ScoredMatch> hamming_topk(const Hypervector& query, const CandidateView& candidates,
                                      std::size_t k, std::uint32_t query_id) {
  if (k == 0) throw DomainError("k must be at least 1");
  if (candidates.size() > 0 && query.dim() != candidates.dim)
    throw DimensionMismatch("query dimension " + std::to_string(query.dim()) + " does not match references (" +
                            std::to_string(candidates.dim) + ")");

  const std::size_t wpr = query.dim() / 64;
  const auto q = query.words();
  const auto dim = static_cast<std::int32_t>(query.dim());
  const std::size_t n = candidates.size();

  // Min-heap on ranking order: the front is the current worst of the kept set.
  std::vector<ScoredMatch> heap;
  heap.reserve(std::min(k, n) + 1);
  const auto worse_first = [](const ScoredMatch& a, const ScoredMatch& b) { return ranks_before(a, b); };

  const std::uint64_t* row = candidates.words.data();
  for (std::size_t i = 0; i < n; ++i, row += wpr) {
    std::int32_t differing = 0;
    for (std::size_t w = 0; w < wpr; ++w) differing += std::popcount(q[w] ^ row[w]);
    const ScoredMatch m{query_id, candidates.reference_ids[i], dim - 2 * differing, candidates.decoy_flags[i] != 0};
    if (heap.size() < k) {
      heap.push_back(m);
      std::push_heap(heap.begin(), heap.end(), worse_first);
    } else if (ranks_before(m, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), worse_first);
      heap.back() = m;
      std::push_heap(heap.begin(), heap.end(), worse_first);
    }
  }
  std::sort(heap.begin(), heap.end(), ranks_before);
  return heap;
}

std::vector<std::vector<ScoredMatch>> batch_search(std::span<const Hypervector> queries,
                                                   std::span<const double> query_masses,
                                                   const ReferenceIndex& index, const SearchParams& params) {
  if (queries.size() != query_masses.size()) throw DimensionMismatch("queries and query masses differ in length");
  std::vector<std::vector<ScoredMatch>> results(queries.size());
  parallel_for(queries.size(), params.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto range = candidate_range(index, query_masses[i], params.window);
      results[i] = hamming_topk(queries[i], index.view(range.begin, range.end), params.k,
                                static_cast<std::uint32_t>(i));
    }
  });
  return results;
}

void write_results_csv(std::ostream& out, const std::vector<std::vector<ScoredMatch>>& results,
                       std::span<const std::string> query_names, std::span<const std::string> reference_names) {
  out << "query_id,rank,reference_id,similarity,is_decoy\n";
  for (const auto& matches : results) {
    std::size_t rank = 1;
    for (const auto& m : matches) {
      out << query_names[m.query_id] << ',' << rank++ << ',' << reference_names[m.reference_id] << ','
          << m.similarity << ',' << (m.is_decoy ? 1 : 0) << '\n';
    }
  }
}

}  // namespace hdoms
