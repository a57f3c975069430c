// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: hdoms_acceptance [substring]   (runs only criteria whose name contains it)

#include "hdoms/experiments.hpp"
#include "hdoms/fdr.hpp"
#include "hdoms/noise_model.hpp"
#include "hdoms/search.hpp"
#include "hdoms/xbar.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace hdoms;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------

void search_oracle(Outcome& out) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const std::size_t dims[] = {256, 1024, 2048};
  std::size_t compared = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t dim = dims[inst % 3];
    const std::size_t n = 1 + rng() % 10000;
    std::vector<Hypervector> refs;
    std::vector<double> masses;
    std::vector<std::uint8_t> flags;
    for (std::size_t i = 0; i < n; ++i) {
      // Every fifth reference repeats an earlier vector to force score ties.
      refs.push_back(i % 5 == 4 ? refs[rng() % i] : test::random_hv(dim, rng));
      masses.push_back(500.0 + static_cast<double>(rng() % 200000) / 100.0);
      flags.push_back(static_cast<std::uint8_t>(rng() % 2));
    }
    const ReferenceIndex index(refs, masses, flags);
    std::vector<std::vector<std::int8_t>> bipolar;
    bipolar.reserve(n);
    for (const auto& r : refs) bipolar.push_back(r.to_bipolar());

    for (int qi = 0; qi < 3; ++qi) {
      const auto query = qi == 0 ? refs[rng() % n] : test::random_hv(dim, rng);
      const auto qb = query.to_bipolar();
      const double qmass = 500.0 + static_cast<double>(rng() % 200000) / 100.0;
      const double windows[] = {kNoWindow, 500.0, 50.0};
      const double window = windows[qi];
      const std::size_t k = 1 + rng() % 20;

      std::vector<ScoredMatch> oracle;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(std::abs(masses[i] - qmass) <= window)) continue;
        long dot = 0;
        for (std::size_t d = 0; d < dim; ++d) dot += qb[d] * bipolar[i][d];
        oracle.push_back({7, static_cast<std::uint32_t>(i), static_cast<std::int32_t>(dot), flags[i] != 0});
      }
      std::sort(oracle.begin(), oracle.end(), [](const ScoredMatch& a, const ScoredMatch& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.reference_id < b.reference_id;
      });
      if (oracle.size() > k) oracle.resize(k);

      const auto range = candidate_range(index, qmass, window);
      const auto got = hamming_topk(query, index.view(range.begin, range.end), k, 7);
      if (got != oracle) {
        out.require(false, "instance " + std::to_string(inst) + " query " + std::to_string(qi) + " differs");
        return;
      }
      ++compared;
    }
  }
  const double secs = seconds_since(t0);
  out.detail << compared << " queries over 200 instances identical, " << secs << " s";
  out.require(secs < 60.0, "runtime < 60 s");
}

// ---------------------------------------------------------------------------

void crossbar_oracle(Outcome& out) {
  RramConfig cfg;
  cfg.adc_bits = 0;
  const std::size_t dim = 192;  // divisible by 1, 2 and 3; three batches of 64 rows
  const std::size_t n_rows = cfg.max_active_rows;
  std::mt19937_64 rng(7);
  double worst_analog = 0.0;
  std::size_t pairs = 0;
  for (unsigned bits = 1; bits <= 3; ++bits) {
    for (int p = 0; p < 1000; ++p) {
      const auto a = test::random_hv(dim, rng);
      const auto b = test::random_hv(dim, rng);
      // Store a in n-bit cells and read it back, then program it as a
      // differential weight column and drive b on the rows.
      const auto stored = read_hypervector(store_hypervector(a, bits, cfg.g_max), dim, bits, cfg.g_max);
      std::vector<double> w(dim);
      for (std::size_t d = 0; d < dim; ++d) w[d] = stored.get(d);
      CrossbarTile tile(2 * dim, 1, TileMode::Differential, 1U << bits, cfg.g_max);
      tile.program(differential_targets(w, dim, 1, 1.0, cfg.g_max), NoiseModel::noiseless(), TimeBucket::Day1, 1);

      long exact = 0;
      for (std::size_t d = 0; d < dim; ++d) exact += a.get(d) * b.get(d);
      double decoded = 0.0;
      std::vector<std::int8_t> x(n_rows);
      for (std::size_t r0 = 0; r0 < dim; r0 += n_rows) {
        long partial = 0;
        for (std::size_t i = 0; i < n_rows; ++i) {
          x[i] = static_cast<std::int8_t>(b.get(r0 + i));
          partial += a.get(r0 + i) * b.get(r0 + i);
        }
        const auto sensed = mvm_sense(tile, r0, x, cfg);
        const double expected_v =
            cfg.v_ref + static_cast<double>(partial) / static_cast<double>(n_rows) * cfg.v_pulse;
        worst_analog = std::max(worst_analog, std::abs(sensed.voltage[0] - expected_v));
        decoded += decode_mac(sensed.adc_voltage[0], n_rows, cfg);
      }
      if (std::llround(decoded) != exact) {
        out.require(false, "n=" + std::to_string(bits) + " pair " + std::to_string(p) + " decoded " +
                               std::to_string(decoded) + " != " + std::to_string(exact));
        return;
      }
      ++pairs;
    }
  }
  out.detail << pairs << " pairs exact after decode, worst analog error " << worst_analog << " V";
  out.require(worst_analog <= 1e-10, "analog error <= 1e-10");
}

// ---------------------------------------------------------------------------

void differential_mapping(Outcome& out) {
  const double g_max = 1.0;
  double worst = 0.0;
  for (double w_max : {1.0, 2.0, 4.0}) {
    const auto top = map_differential(w_max, w_max, g_max);
    const auto mid = map_differential(0.0, w_max, g_max);
    const auto bottom = map_differential(-w_max, w_max, g_max);
    worst = std::max({worst, std::abs(top.g_plus - g_max), std::abs(top.g_minus), std::abs(mid.g_plus - g_max / 2),
                      std::abs(mid.g_minus - g_max / 2), std::abs(bottom.g_plus), std::abs(bottom.g_minus - g_max)});
  }
  out.require(worst <= 1e-12, "endpoints and midpoint within 1e-12");

  std::mt19937_64 rng(3);
  double worst_sum = 0.0;
  std::size_t pairs = 0;
  for (unsigned bits = 1; bits <= 3; ++bits) {
    const double w_max = static_cast<double>(1U << (bits - 1));
    const auto grid = weight_grid(bits, w_max);
    const std::size_t rows = 64, cols = 128;
    std::vector<double> w(rows * cols);
    for (auto& v : w) v = grid[rng() % grid.size()];
    CrossbarTile tile(2 * rows, cols, TileMode::Differential, 1U << bits, g_max);
    tile.program(differential_targets(w, rows, cols, w_max, g_max), NoiseModel::noiseless(), TimeBucket::T0, 1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        worst_sum = std::max(worst_sum, std::abs(tile.g(2 * r, c) + tile.g(2 * r + 1, c) - g_max));
        ++pairs;
      }
  }
  out.detail << "endpoint error " << worst << ", " << pairs << " programmed pairs, worst |g+ + g- - g_max| "
             << worst_sum;
  out.require(worst_sum <= 1e-12, "g+ + g- == g_max");
}

// ---------------------------------------------------------------------------

void storage_round_trip(Outcome& out) {
  const std::size_t dim = 1536;
  std::mt19937_64 rng(11);
  std::size_t errors = 0;
  for (unsigned bits = 1; bits <= 3; ++bits)
    for (int v = 0; v < 10000; ++v) {
      const auto h = test::random_hv(dim, rng);
      errors += hamming_distance(h, read_hypervector(store_hypervector(h, bits, 1.0), dim, bits, 1.0));
    }
  out.require(errors == 0, "noiseless round trip");

  const auto noise = NoiseModel::default_model();
  BerOptions opts;
  opts.vectors = 1000;
  opts.dim = dim;
  std::map<std::pair<unsigned, TimeBucket>, double> ber;
  for (unsigned bits = 1; bits <= 3; ++bits)
    for (auto bucket : kAllTimeBuckets) ber[{bits, bucket}] = measure_ber(bits, bucket, noise, opts);

  out.detail << "3e4 vectors round-tripped; BER";
  for (unsigned bits = 1; bits <= 3; ++bits) {
    out.detail << " n=" << bits << ":";
    for (auto bucket : kAllTimeBuckets) out.detail << ' ' << ber[{bits, bucket}];
  }
  for (unsigned bits = 1; bits <= 3; ++bits)
    for (std::size_t t = 1; t < kAllTimeBuckets.size(); ++t)
      out.require(ber[{bits, kAllTimeBuckets[t - 1]}] <= ber[{bits, kAllTimeBuckets[t]}],
                  "BER non-decreasing in time, n=" + std::to_string(bits));
  for (auto bucket : kAllTimeBuckets) {
    const std::string b(to_string(bucket));
    out.require(ber[{1, bucket}] < ber[{2, bucket}], "2-level < 4-level at " + b);
    out.require(ber[{2, bucket}] < ber[{3, bucket}], "4-level < 8-level at " + b);
  }
}

// ---------------------------------------------------------------------------
// Retrieval criteria share one 100k-reference robustness sweep.

SweepSpec desk_scale_spec() {
  SweepSpec spec;
  spec.kind = SweepKind::Robustness;
  spec.dims = {8192};
  spec.bers = {0.0, 0.1};
  spec.id_bits = {1, 3};
  spec.seeds = {1, 2, 3, 4, 5};
  spec.bench.library_size = 100000;
  spec.bench.query_count = 1000;
  return spec;
}

struct RobustnessData {
  std::vector<RobustnessRow> rows;
  double seconds = 0.0;
};

const RobustnessData& robustness_data() {
  static const RobustnessData data = [] {
    RobustnessData d;
    const auto t0 = Clock::now();
    d.rows = sweep_robustness(desk_scale_spec());
    d.seconds = seconds_since(t0);
    return d;
  }();
  return data;
}

std::vector<double> rates(const std::vector<RobustnessRow>& rows, unsigned bits, double ber) {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.id_bits == bits && r.ber == ber) out.push_back(r.retrieval_rate);
  return out;
}

void robustness(Outcome& out) {
  const auto& data = robustness_data();
  // The sweep covers both precisions; time the 3-bit half.
  const double clean = mean(rates(data.rows, 3, 0.0));
  const double noisy = mean(rates(data.rows, 3, 0.1));
  const double seconds_3bit = data.seconds / 2.0;
  out.detail << "3-bit D=8192, 100k refs, 1k queries, 5 seeds: clean " << clean << ", 10% BER " << noisy
             << " (ratio " << noisy / clean << "), ~" << seconds_3bit << " s";
  out.require(noisy >= 0.9 * clean, "rate at 10% BER >= 90% of clean");
  out.require(seconds_3bit < 15 * 60.0, "wall time < 15 min");
}

void multibit(Outcome& out) {
  const auto& data = robustness_data();
  const double one = mean(rates(data.rows, 1, 0.1));
  const double three = mean(rates(data.rows, 3, 0.1));
  out.detail << "10% BER mean retrieval: 1-bit " << one << ", 3-bit " << three << ", margin " << three - one
             << " (clean: 1-bit " << mean(rates(data.rows, 1, 0.0)) << ", 3-bit "
             << mean(rates(data.rows, 3, 0.0)) << ")";
  out.require(three >= one, "3-bit >= 1-bit at 10% BER");
}

void dimension_trend(Outcome& out) {
  SweepSpec spec;
  spec.kind = SweepKind::Dimension;
  spec.dims = {512, 2048, 8192};
  spec.bers = {0.05};
  spec.id_bits = {3};
  spec.seeds = {1, 2, 3, 4, 5};
  spec.bench.library_size = 20000;
  spec.bench.query_count = 1000;
  const auto rows = sweep_dimension(spec);
  std::vector<double> means;
  for (std::size_t dim : spec.dims) {
    std::vector<double> r;
    for (const auto& row : rows)
      if (row.dim == dim) r.push_back(row.retrieval_rate);
    means.push_back(mean(r));
  }
  out.detail << "5% BER, 20k refs, mean retrieval D=512 " << means[0] << ", D=2048 " << means[1] << ", D=8192 "
             << means[2];
  out.require(means[0] <= means[1] && means[1] <= means[2], "non-decreasing in D");
}

void chunked_equivalence(Outcome& out) {
  auto spec = desk_scale_spec();
  spec.id_bits = {3};
  spec.encoder.chunked = true;
  spec.encoder.chunk_count = 64;
  const auto chunked = sweep_robustness(spec);
  const auto& plain = robustness_data().rows;
  const double clean_plain = mean(rates(plain, 3, 0.0));
  const double clean_chunked = mean(rates(chunked, 3, 0.0));
  const double noisy_plain = mean(rates(plain, 3, 0.1));
  const double noisy_chunked = mean(rates(chunked, 3, 0.1));
  out.detail << "retrieval unchunked/chunked: clean " << clean_plain << "/" << clean_chunked << ", 10% BER "
             << noisy_plain << "/" << noisy_chunked;
  out.require(std::abs(clean_plain - clean_chunked) < 0.02, "clean difference < 2 pp");
  out.require(std::abs(noisy_plain - noisy_chunked) < 0.02, "10% BER difference < 2 pp");

  // Cycle counts of in-memory binding, one and several row batches.
  RramConfig cfg;
  cfg.adc_bits = 0;
  const std::size_t dim = 8192, chunks = 64;
  for (std::size_t rows : {64UL, 150UL}) {
    std::vector<double> w(rows * dim, 1.0);
    CrossbarTile tile(2 * rows, dim, TileMode::Differential, 8, 1.0);
    tile.program(differential_targets(w, rows, dim, 1.0, 1.0), NoiseModel::noiseless(), TimeBucket::T0, 1);
    const std::vector<std::int8_t> inputs(rows * dim, 1);
    const auto naive = encode_elementwise(tile, inputs, EncodeMode::Naive, chunks, cfg, 1.0);
    const auto fast = encode_elementwise(tile, inputs, EncodeMode::Chunked, chunks, cfg, 1.0);
    out.detail << "; " << rows << " rows: cycles " << naive.cycles << "/" << fast.cycles;
    out.require(naive.cycles == fast.cycles * (dim / chunks), "cycle ratio == D/chunk_count");
  }
}

// ---------------------------------------------------------------------------

void fdr_filter_oracle(Outcome& out) {
  std::mt19937_64 rng(99);
  const std::vector<double> levels = {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.34, 0.5, 0.9};
  std::size_t found = 0;
  for (int mix = 0; mix < 100; ++mix) {
    const std::size_t nt = 1 + rng() % 300, nd = rng() % 150;
    std::vector<ScoredMatch> m;
    std::uint32_t q = 0;
    // Targets skew high, decoys low, with overlap and many ties.
    for (std::size_t i = 0; i < nt; ++i) m.push_back({q++, 0, static_cast<std::int32_t>(rng() % 60) + 20, false});
    for (std::size_t i = 0; i < nd; ++i) m.push_back({q++, 0, static_cast<std::int32_t>(rng() % 60), true});

    std::vector<std::int32_t> scores;
    for (const auto& x : m) scores.push_back(x.similarity);
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

    std::vector<std::size_t> prev_accepted;
    double prev_fdr = -1.0;
    for (double level : levels) {
      // Exhaustive scan: smallest observed score whose FDR meets the level.
      std::int32_t cut = std::numeric_limits<std::int32_t>::max();
      bool ok = false;
      for (auto s : scores) {
        std::size_t t = 0, d = 0;
        for (const auto& x : m)
          if (x.similarity >= s) (x.is_decoy ? d : t) += 1;
        if (static_cast<double>(d) / static_cast<double>(std::max<std::size_t>(1, t)) <= level) {
          cut = s;
          ok = true;
          break;
        }
      }
      std::vector<std::size_t> expected;
      if (ok)
        for (const auto& x : m)
          if (!x.is_decoy && x.similarity >= cut) expected.push_back(x.query_id);
      std::sort(expected.begin(), expected.end());

      const auto r = fdr_filter(m, level);
      std::vector<std::size_t> got;
      for (const auto& x : r.accepted) got.push_back(x.query_id);
      std::sort(got.begin(), got.end());

      const std::string where = "mixture " + std::to_string(mix) + " level " + std::to_string(level);
      out.require(r.threshold_found == ok, "threshold existence, " + where);
      out.require(got == expected, "accepted set, " + where);
      if (ok) {
        out.require(r.score_threshold == cut, "cut score, " + where);
        out.require(r.achieved_fdr <= level, "achieved FDR within level, " + where);
        ++found;
      }
      // Invariants: sets nested in the level, achieved FDR non-decreasing
      // as the level (and so the cut) relaxes, ranking order.
      out.require(std::includes(got.begin(), got.end(), prev_accepted.begin(), prev_accepted.end()),
                  "nested accepted sets, " + where);
      if (ok) {
        out.require(r.achieved_fdr >= prev_fdr, "achieved FDR monotone, " + where);
        prev_fdr = r.achieved_fdr;
      }
      for (std::size_t i = 1; i < r.accepted.size(); ++i)
        out.require(r.accepted[i - 1].similarity >= r.accepted[i].similarity, "ranking order, " + where);
      prev_accepted = got;
      if (!out.pass) return;
    }
    const auto curve = fdr_curve(m);
    for (std::size_t i = 1; i < curve.size(); ++i) {
      out.require(curve[i].q_value <= curve[i - 1].q_value, "q-value non-increasing in score");
      out.require(curve[i].targets <= curve[i - 1].targets && curve[i].decoys <= curve[i - 1].decoys,
                  "counts non-increasing in score");
    }
    for (const auto& p : curve) out.require(p.q_value <= p.fdr, "q-value <= FDR");
  }
  out.detail << "100 mixtures x " << levels.size() << " levels agree with the exhaustive scan (" << found
             << " with a qualifying cut)";
}

// ---------------------------------------------------------------------------

#ifdef HDOMS_CLI_PATH
void cli_determinism(Outcome& out) {
  test::TempDir dir;
  const std::string cli = HDOMS_CLI_PATH;
  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  std::size_t checked = 0;

  // Runs `args` under two thread counts and twice at one; every listed output
  // file and stdout must be byte-identical across the three runs.
  const auto check = [&](const std::string& label, const std::string& args, const std::vector<std::string>& files) {
    std::vector<std::string> snapshots;
    for (const char* threads : {"1", "4", "1"}) {
      const auto r = test::run_command(cli + " -q --threads " + threads + " " + args + " 2>/dev/null");
      if (r.exit_code != 0) {
        out.require(false, label + " exited with " + std::to_string(r.exit_code));
        return;
      }
      std::string snap = r.out;
      for (const auto& f : files) snap += "\x1f" + test::read_file(p(f));
      snapshots.push_back(std::move(snap));
    }
    out.require(snapshots[0] == snapshots[1] && snapshots[0] == snapshots[2], label + " output identical");
    ++checked;
  };

  check("synth",
        "synth --library-size 400 --query-count 40 --seed 5 --library " + p("lib.mgf") + " --queries " + p("q.mgf") +
            " --truth " + p("truth.csv"),
        {"lib.mgf", "q.mgf", "truth.csv"});
  check("decoys", "decoys " + p("lib.mgf") + " --seed 2 -o " + p("decoys.mgf"), {"decoys.mgf"});
  check("encode", "encode " + p("lib.mgf") + " --decoys --dim 2048 -o " + p("lib.hdv"), {"lib.hdv"});
  check("encode-queries", "encode " + p("q.mgf") + " --dim 2048 -o " + p("q.hdv"), {"q.hdv"});
  check("search",
        "search " + p("q.mgf") + " " + p("lib.mgf") + " --dim 2048 -k 5 --fdr 0.05 -o " + p("res.csv") +
            " --accepted " + p("acc.csv"),
        {"res.csv", "acc.csv"});
  check("search-store", "search " + p("q.hdv") + " " + p("lib.hdv") + " -k 5 -o " + p("res2.csv"), {"res2.csv"});
  check("search-emulated",
        "search " + p("q.mgf") + " " + p("lib.mgf") + " --dim 2048 --emulate --cell-bits 2 --time-bucket 1day -o " +
            p("res3.csv") + " --accepted " + p("acc3.csv"),
        {"res3.csv", "acc3.csv"});
  check("simulate", "simulate --bits 1,2,3 --rows 4,16,64 --seeds 1,2,3 --vectors 20 --trials 20 -o " + p("sim.csv"),
        {"sim.csv"});

  test::write_text(p("robust.cfg"),
                   "sweep = robustness\ndims = 1024\nbers = 0, 0.05, 0.1\nid_bits = 1, 3\nseeds = 1, 2, 3\n"
                   "bench.library_size = 300\nbench.query_count = 30\n");
  check("sweep-robustness", "sweep " + p("robust.cfg") + " -o " + p("robust.csv"), {"robust.csv"});
  test::write_text(p("dims.cfg"),
                   "sweep = dimension\ndims = 256, 1024\nbers = 0.05\nrepetitions = 3\n"
                   "bench.library_size = 300\nbench.query_count = 30\n");
  check("sweep-dimension", "sweep " + p("dims.cfg") + " -o " + p("dims.csv"), {"dims.csv"});
  test::write_text(p("rram.cfg"),
                   "sweep = rram\ncell_bits = 1, 2, 3\nrows = 4, 64\nseeds = 1, 2, 3\nrram.ber_vectors = 20\n"
                   "rram.nmse_trials = 20\n");
  check("sweep-rram", "sweep " + p("rram.cfg") + " -o " + p("rram.csv"), {"rram.csv"});

  out.detail << checked << " commands byte-identical across reruns and --threads 1/4";
}
#endif

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"search_oracle_equivalence", search_oracle},
      {"crossbar_oracle_equivalence", crossbar_oracle},
      {"differential_mapping_identities", differential_mapping},
      {"storage_round_trip_and_ber_ordering", storage_round_trip},
      {"robustness_at_10pct_ber", robustness},
      {"multibit_ids_beat_binary_at_10pct_ber", multibit},
      {"dimension_trend_at_5pct_ber", dimension_trend},
      {"chunked_level_equivalence", chunked_equivalence},
      {"fdr_filter_oracle_and_monotonicity", fdr_filter_oracle},
#ifdef HDOMS_CLI_PATH
      {"cli_determinism", cli_determinism},
#endif
  };

  int failures = 0;
  int ran = 0;
  for (const auto& [name, fn] : criteria) {
    if (!filter.empty() && name.find(filter) == std::string::npos) continue;
    Outcome out;
    const auto t0 = Clock::now();
    try {
      fn(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    ++ran;
    if (!out.pass) ++failures;
    std::printf("%s %s (%.1f s): %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0),
                out.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
