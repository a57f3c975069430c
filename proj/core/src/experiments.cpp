#include "hdoms/experiments.hpp"

#include "hdoms/decoys.hpp"
#include "hdoms/error.hpp"
#include "hdoms/fdr.hpp"
#include "hdoms/mgf.hpp"
#include "hdoms/parallel.hpp"
#include "hdoms/rng.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <set>

namespace hdoms {

EncodedBench encode_bench(const SyntheticBench& bench, const EncoderConfig& encoder, const BenchEvalConfig& eval) {
  const Encoder enc(encoder, eval.bins);
  const unsigned threads = eval.threads;

  // Preprocess in parallel; rejected spectra stay as nullopt so indices line up.
  const auto preprocess_all = [&](const std::vector<Spectrum>& in) {
    std::vector<std::optional<Spectrum>> out(in.size());
    parallel_for(in.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) out[i] = try_preprocess(in[i], eval.preprocess);
    });
    return out;
  };
  const auto lib = preprocess_all(bench.library);
  const auto qry = preprocess_all(bench.queries);

  std::vector<Spectrum> refs;
  std::vector<std::int64_t> ref_id_of(bench.library.size(), -1);
  for (std::size_t i = 0; i < lib.size(); ++i) {
    if (!lib[i]) continue;
    ref_id_of[i] = static_cast<std::int64_t>(refs.size());
    refs.push_back(*lib[i]);
  }
  if (refs.empty()) throw DomainError("every library spectrum was rejected by preprocessing");
  const std::size_t targets = refs.size();
  if (eval.decoys) {
    CyclicShiftDecoys::Options opt;
    opt.min_mz = eval.bins.min_mz;
    opt.max_mz = eval.bins.max_mz;
    opt.seed = eval.decoy_seed;
    auto decoys = generate_decoys(refs, CyclicShiftDecoys(opt));
    for (auto& d : decoys) refs.push_back(std::move(d));
  }

  const auto ref_vectors = enc.encode_batch(refs, threads);
  std::vector<double> masses(refs.size());
  std::vector<std::uint8_t> flags(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    masses[i] = refs[i].precursor_mass;
    flags[i] = refs[i].is_decoy ? 1 : 0;
  }

  EncodedBench out;
  out.index = ReferenceIndex(ref_vectors, masses, flags);
  out.target_count = targets;
  out.query_total = bench.queries.size();

  std::vector<Spectrum> kept;
  for (std::size_t j = 0; j < qry.size(); ++j) {
    if (!qry[j]) continue;
    kept.push_back(*qry[j]);
    out.query_masses.push_back(qry[j]->precursor_mass);
    out.truth.push_back(ref_id_of[bench.truth[j]]);
  }
  out.queries = enc.encode_batch(kept, threads);
  return out;
}

void inject_bit_errors(ReferenceIndex& index, double ber, std::uint64_t seed) {
  if (!(ber >= 0.0 && ber <= 1.0)) throw DomainError("bit error rate must lie in [0, 1]");
  if (ber == 0.0 || index.size() == 0) return;
  // 16-bit uniform draws compared against a fixed threshold: flips at a lower
  // rate are always a subset of the flips at a higher rate.
  const auto threshold = static_cast<std::uint32_t>(std::llround(ber * 65536.0));
  const std::size_t wpr = index.words_per_row();
  auto words = index.mutable_words();
  parallel_for(index.size(), 0, [&](std::size_t begin, std::size_t end) {
    for (std::size_t pos = begin; pos < end; ++pos) {
      const CounterRng rng(seed, Stream::BitFlips, index.reference_id(pos));
      for (std::size_t w = 0; w < wpr; ++w) {
        std::uint64_t mask = 0;
        for (unsigned q = 0; q < 16; ++q) {
          std::uint64_t draw = rng.at(w * 16 + q);
          for (unsigned k = 0; k < 4; ++k, draw >>= 16)
            if ((draw & 0xFFFF) < threshold) mask |= std::uint64_t{1} << (q * 4 + k);
        }
        words[pos * wpr + w] ^= mask;
      }
    }
  });
}

RetrievalOutcome evaluate_retrieval(const EncodedBench& bench, const ReferenceIndex& index,
                                    const BenchEvalConfig& eval) {
  SearchParams params;
  params.window = eval.window;
  params.k = 1;
  params.threads = eval.threads;
  const auto results = batch_search(bench.queries, bench.query_masses, index, params);

  RetrievalOutcome out;
  for (std::size_t j = 0; j < results.size(); ++j)
    if (!results[j].empty() && bench.truth[j] >= 0 &&
        results[j].front().reference_id == static_cast<std::uint32_t>(bench.truth[j]))
      ++out.correct;
  out.retrieval_rate = bench.query_total == 0 ? 0.0
                                              : static_cast<double>(out.correct) / static_cast<double>(bench.query_total);
  const auto best = best_matches(results);
  out.accepted_count = fdr_filter(best, eval.fdr_threshold).accepted.size();
  return out;
}

std::vector<RetrievalOutcome> retrieval_vs_ber(const EncodedBench& bench, std::span<const double> bers,
                                               std::uint64_t flip_seed, const BenchEvalConfig& eval) {
  std::vector<RetrievalOutcome> out;
  out.reserve(bers.size());
  for (const double ber : bers) {
    if (ber == 0.0) {
      out.push_back(evaluate_retrieval(bench, bench.index, eval));
      continue;
    }
    ReferenceIndex noisy = bench.index;
    inject_bit_errors(noisy, ber, flip_seed);
    out.push_back(evaluate_retrieval(bench, noisy, eval));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep spec

std::string_view to_string(SweepKind kind) noexcept {
  switch (kind) {
    case SweepKind::Robustness: return "robustness";
    case SweepKind::Dimension: return "dimension";
    case SweepKind::Rram: return "rram";
  }
  return "?";
}

namespace {

SweepKind parse_kind(const std::string& s) {
  if (s == "robustness") return SweepKind::Robustness;
  if (s == "dimension") return SweepKind::Dimension;
  if (s == "rram") return SweepKind::Rram;
  throw ConfigError("unknown sweep kind '" + s + "' (expected robustness, dimension or rram)");
}

template <typename T>
std::vector<T> non_negative_ints(const std::vector<long long>& in, const std::string& key) {
  std::vector<T> out;
  for (const auto v : in) {
    if (v < 0) throw ConfigError(key + " values must be non-negative");
    out.push_back(static_cast<T>(v));
  }
  return out;
}

std::size_t size_value(const KvConfig& cfg, const std::string& key, std::size_t fallback) {
  const auto v = cfg.get_int(key);
  if (!v) return fallback;
  if (*v < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::size_t>(*v);
}

const std::set<std::string>& sweep_keys() {
  static const std::set<std::string> keys = {
      "sweep", "dims", "bers", "id_bits", "cell_bits", "rows", "time_buckets", "seeds", "repetitions",
      "base_seed", "threads",
      "bench.library_size", "bench.query_count", "bench.min_peaks", "bench.max_peaks", "bench.min_mz",
      "bench.max_mz", "bench.min_precursor", "bench.max_precursor", "bench.family_size",
      "bench.family_shared_fraction", "bench.peak_dropout", "bench.intensity_jitter", "bench.mz_jitter",
      "bench.modified_fraction", "bench.mod_peak_fraction", "bench.max_mod_mass", "bench.noise_peaks",
      "encoder.levels", "encoder.chunked", "encoder.chunk_count",
      "search.window", "fdr.threshold", "decoys",
      "rram.adc_bits", "rram.g_max", "rram.v_ref", "rram.v_pulse", "rram.ber_vectors", "rram.ber_dim",
      "rram.nmse_trials", "rram.nmse_cols", "noise_config", "noise_sigma"};
  return keys;
}

}  // namespace

SweepSpec SweepSpec::from_config(const KvConfig& cfg, const std::filesystem::path& base_dir) {
  cfg.reject_unknown(sweep_keys());
  SweepSpec s;
  if (const auto v = cfg.get_string("sweep")) s.kind = parse_kind(*v);
  else throw ConfigError("sweep spec needs a 'sweep' key (robustness, dimension or rram)");

  if (const auto v = cfg.get_int_list("dims")) s.dims = non_negative_ints<std::size_t>(*v, "dims");
  if (const auto v = cfg.get_double_list("bers")) s.bers = *v;
  if (const auto v = cfg.get_int_list("id_bits")) s.id_bits = non_negative_ints<unsigned>(*v, "id_bits");
  if (const auto v = cfg.get_int_list("cell_bits")) s.cell_bits = non_negative_ints<unsigned>(*v, "cell_bits");
  if (const auto v = cfg.get_int_list("rows")) s.rows = non_negative_ints<std::size_t>(*v, "rows");
  if (const auto v = cfg.get_string_list("time_buckets")) {
    s.time_buckets.clear();
    for (const auto& b : *v) s.time_buckets.push_back(parse_time_bucket(b));
  }
  if (cfg.contains("seeds") && cfg.contains("repetitions"))
    throw ConfigError("give either 'seeds' or 'repetitions', not both");
  if (const auto v = cfg.get_int_list("seeds")) s.seeds = non_negative_ints<std::uint64_t>(*v, "seeds");
  if (const auto r = cfg.get_int("repetitions")) {
    if (*r < 0) throw ConfigError("repetitions must be non-negative");
    const auto base = static_cast<std::uint64_t>(size_value(cfg, "base_seed", 1));
    s.seeds.clear();
    for (long long i = 0; i < *r; ++i) s.seeds.push_back(base + static_cast<std::uint64_t>(i));
  } else if (cfg.contains("base_seed")) {
    throw ConfigError("base_seed only applies together with repetitions");
  }
  const auto threads = static_cast<unsigned>(size_value(cfg, "threads", 0));
  s.eval.threads = threads;

  auto& b = s.bench;
  b.library_size = size_value(cfg, "bench.library_size", b.library_size);
  b.query_count = size_value(cfg, "bench.query_count", b.query_count);
  b.min_peaks = size_value(cfg, "bench.min_peaks", b.min_peaks);
  b.max_peaks = size_value(cfg, "bench.max_peaks", b.max_peaks);
  b.min_mz = cfg.get_double("bench.min_mz").value_or(b.min_mz);
  b.max_mz = cfg.get_double("bench.max_mz").value_or(b.max_mz);
  b.min_precursor = cfg.get_double("bench.min_precursor").value_or(b.min_precursor);
  b.max_precursor = cfg.get_double("bench.max_precursor").value_or(b.max_precursor);
  b.family_size = size_value(cfg, "bench.family_size", b.family_size);
  b.family_shared_fraction = cfg.get_double("bench.family_shared_fraction").value_or(b.family_shared_fraction);
  b.peak_dropout = cfg.get_double("bench.peak_dropout").value_or(b.peak_dropout);
  b.intensity_jitter = cfg.get_double("bench.intensity_jitter").value_or(b.intensity_jitter);
  b.mz_jitter = cfg.get_double("bench.mz_jitter").value_or(b.mz_jitter);
  b.modified_fraction = cfg.get_double("bench.modified_fraction").value_or(b.modified_fraction);
  b.mod_peak_fraction = cfg.get_double("bench.mod_peak_fraction").value_or(b.mod_peak_fraction);
  b.max_mod_mass = cfg.get_double("bench.max_mod_mass").value_or(b.max_mod_mass);
  b.noise_peaks = size_value(cfg, "bench.noise_peaks", b.noise_peaks);

  s.encoder.levels = size_value(cfg, "encoder.levels", s.encoder.levels);
  s.encoder.chunked = cfg.get_bool("encoder.chunked").value_or(s.encoder.chunked);
  s.encoder.chunk_count = size_value(cfg, "encoder.chunk_count", s.encoder.chunk_count);
  s.eval.window = cfg.get_double("search.window").value_or(s.eval.window);
  s.eval.fdr_threshold = cfg.get_double("fdr.threshold").value_or(s.eval.fdr_threshold);
  s.eval.decoys = cfg.get_bool("decoys").value_or(s.eval.decoys);

  s.rram.adc_bits = static_cast<unsigned>(size_value(cfg, "rram.adc_bits", s.rram.adc_bits));
  s.rram.g_max = cfg.get_double("rram.g_max").value_or(s.rram.g_max);
  s.rram.v_ref = cfg.get_double("rram.v_ref").value_or(s.rram.v_ref);
  s.rram.v_pulse = cfg.get_double("rram.v_pulse").value_or(s.rram.v_pulse);
  s.ber_options.vectors = size_value(cfg, "rram.ber_vectors", s.ber_options.vectors);
  s.ber_options.dim = size_value(cfg, "rram.ber_dim", s.ber_options.dim);
  s.ber_options.g_max = s.rram.g_max;
  s.nmse_options.trials = size_value(cfg, "rram.nmse_trials", s.nmse_options.trials);
  s.nmse_options.cols = size_value(cfg, "rram.nmse_cols", s.nmse_options.cols);
  if (cfg.contains("noise_config") && cfg.contains("noise_sigma"))
    throw ConfigError("give either 'noise_config' or 'noise_sigma', not both");
  if (const auto p = cfg.get_string("noise_config")) {
    std::filesystem::path path(*p);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    s.noise = NoiseModel::load(path);
  }
  if (const auto v = cfg.get_double("noise_sigma")) s.noise = NoiseModel::constant(*v);

  s.validate();
  return s;
}

SweepSpec SweepSpec::load(const std::filesystem::path& path) {
  return from_config(KvConfig::load(path), path.parent_path());
}

void SweepSpec::validate_axes() const {
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  const auto check_bers = [&] {
    if (bers.empty()) throw ConfigError("bers must not be empty");
    for (const double b : bers)
      if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bers must lie in [0, 1]");
  };
  switch (kind) {
    case SweepKind::Robustness:
    case SweepKind::Dimension: {
      if (dims.empty()) throw ConfigError("dims must not be empty");
      check_bers();
      if (kind == SweepKind::Robustness && id_bits.empty()) throw ConfigError("id_bits must not be empty");
      if (kind == SweepKind::Dimension && bers.size() != 1)
        throw ConfigError("a dimension sweep runs at a single ber; give exactly one value in bers");
      if (kind == SweepKind::Dimension && id_bits.size() != 1)
        throw ConfigError("a dimension sweep uses a single id precision; give exactly one value in id_bits");
      bench.validate();
      for (const auto d : dims)
        for (const auto bits : id_bits) {
          EncoderConfig e = encoder;
          e.dim = d;
          e.id_precision_bits = bits;
          e.validate();
        }
      eval.preprocess.validate();
      eval.bins.validate();
      if (!(eval.window >= 0.0)) throw ConfigError("search.window must be non-negative");
      if (!(eval.fdr_threshold > 0.0 && eval.fdr_threshold < 1.0))
        throw ConfigError("fdr.threshold must lie in (0, 1)");
      break;
    }
    case SweepKind::Rram: {
      if (cell_bits.empty() || rows.empty() || time_buckets.empty())
        throw ConfigError("cell_bits, rows and time_buckets must not be empty");
      for (const auto n : cell_bits) {
        RramConfig r = rram;
        r.bits_per_cell = n;
        r.validate();
        if (ber_options.dim % 64 != 0 || ber_options.dim % n != 0)
          throw ConfigError("rram.ber_dim must be divisible by 64 and by every cell_bits value");
      }
      for (const auto r : rows)
        if (r < 1 || r > rram.max_active_rows) throw ConfigError("rows must lie in [1, max_active_rows]");
      if (ber_options.vectors == 0 || nmse_options.trials == 0 || nmse_options.cols == 0)
        throw ConfigError("measurement trial counts must be positive");
      noise.validate();
      break;
    }
  }
}

void SweepSpec::validate() const {
  validate_axes();
  if (seeds.size() < kMinRepetitions)
    throw ConfigError("sweeps need at least " + std::to_string(kMinRepetitions) + " seeds, got " +
                      std::to_string(seeds.size()));
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

BenchEvalConfig eval_for_seed(const SweepSpec& spec, std::uint64_t seed) {
  BenchEvalConfig e = spec.eval;
  e.decoy_seed = seed;
  return e;
}

}  // namespace

std::vector<RobustnessRow> sweep_robustness(const SweepSpec& spec) {
  spec.validate_axes();
  const std::size_t nb = spec.bers.size();
  const std::size_t ns = spec.seeds.size();
  const std::size_t nbits = spec.id_bits.size();
  std::vector<RobustnessRow> rows(spec.dims.size() * nbits * nb * ns);

  // Each (seed) bench is generated once and encoded per (dim, id_bits).
  for (std::size_t si = 0; si < ns; ++si) {
    const std::uint64_t seed = spec.seeds[si];
    SyntheticBenchSpec bs = spec.bench;
    bs.seed = seed;
    const auto bench = generate_synthetic_bench(bs);
    const auto eval = eval_for_seed(spec, seed);
    for (std::size_t di = 0; di < spec.dims.size(); ++di)
      for (std::size_t bi = 0; bi < nbits; ++bi) {
        EncoderConfig enc = spec.encoder;
        enc.dim = spec.dims[di];
        enc.id_precision_bits = spec.id_bits[bi];
        enc.seed = seed;
        const auto encoded = encode_bench(bench, enc, eval);
        const auto outcomes = retrieval_vs_ber(encoded, spec.bers, seed, eval);
        for (std::size_t ri = 0; ri < nb; ++ri) {
          auto& row = rows[((di * nbits + bi) * nb + ri) * ns + si];
          row = {enc.dim, enc.id_precision_bits, spec.bers[ri], seed, outcomes[ri].retrieval_rate,
                 outcomes[ri].accepted_count};
        }
      }
  }
  return rows;
}

std::vector<DimensionRow> sweep_dimension(const SweepSpec& spec) {
  spec.validate_axes();
  const std::size_t ns = spec.seeds.size();
  std::vector<DimensionRow> rows(spec.dims.size() * ns);
  for (std::size_t si = 0; si < ns; ++si) {
    const std::uint64_t seed = spec.seeds[si];
    SyntheticBenchSpec bs = spec.bench;
    bs.seed = seed;
    const auto bench = generate_synthetic_bench(bs);
    const auto eval = eval_for_seed(spec, seed);
    for (std::size_t di = 0; di < spec.dims.size(); ++di) {
      EncoderConfig enc = spec.encoder;
      enc.dim = spec.dims[di];
      enc.id_precision_bits = spec.id_bits.front();
      enc.seed = seed;
      const auto encoded = encode_bench(bench, enc, eval);
      const auto outcome = retrieval_vs_ber(encoded, spec.bers, seed, eval).front();
      rows[di * ns + si] = {enc.dim, seed, outcome.retrieval_rate};
    }
  }
  return rows;
}

std::vector<RramRow> sweep_rram(const SweepSpec& spec) {
  spec.validate_axes();
  const std::size_t nn = spec.cell_bits.size();
  const std::size_t nt = spec.time_buckets.size();
  const std::size_t nr = spec.rows.size();
  const std::size_t ns = spec.seeds.size();
  std::vector<RramRow> rows(nn * nt * nr * ns);
  // BER does not depend on the number of activated rows; measure it once per (n, t, seed).
  std::vector<double> bers(nn * nt * ns);
  parallel_for(bers.size(), spec.eval.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t si = i % ns;
      const std::size_t ti = (i / ns) % nt;
      const std::size_t ni = i / (ns * nt);
      BerOptions opt = spec.ber_options;
      opt.seed = spec.seeds[si];
      bers[i] = measure_ber(spec.cell_bits[ni], spec.time_buckets[ti], spec.noise, opt);
    }
  });
  parallel_for(rows.size(), spec.eval.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t si = i % ns;
      const std::size_t ri = (i / ns) % nr;
      const std::size_t ti = (i / (ns * nr)) % nt;
      const std::size_t ni = i / (ns * nr * nt);
      RramConfig cfg = spec.rram;
      cfg.bits_per_cell = spec.cell_bits[ni];
      cfg.time_bucket = spec.time_buckets[ti];
      cfg.seed = spec.seeds[si];
      const double nmse = measure_mvm_nmse(cfg.bits_per_cell, spec.rows[ri], spec.noise, cfg, spec.nmse_options);
      rows[i] = {cfg.bits_per_cell, cfg.time_bucket, spec.rows[ri], bers[(ni * nt + ti) * ns + si], nmse,
                 cfg.seed};
    }
  });
  return rows;
}

void write_robustness_csv(std::ostream& out, std::span<const RobustnessRow> rows) {
  out << "D,id_bits,ber,seed,retrieval_rate,accepted_count\n";
  for (const auto& r : rows)
    out << r.dim << ',' << r.id_bits << ',' << format_double(r.ber) << ',' << r.seed << ','
        << format_double(r.retrieval_rate) << ',' << r.accepted_count << '\n';
}

void write_dimension_csv(std::ostream& out, std::span<const DimensionRow> rows) {
  out << "D,seed,retrieval_rate\n";
  for (const auto& r : rows) out << r.dim << ',' << r.seed << ',' << format_double(r.retrieval_rate) << '\n';
}

void write_rram_csv(std::ostream& out, std::span<const RramRow> rows) {
  out << "n,time_bucket,rows,ber,nmse,seed\n";
  for (const auto& r : rows)
    out << r.bits_per_cell << ',' << to_string(r.bucket) << ',' << r.rows << ',' << format_double(r.ber) << ','
        << format_double(r.nmse) << ',' << r.seed << '\n';
}

void run_sweep(const SweepSpec& spec, std::ostream& out) {
  switch (spec.kind) {
    case SweepKind::Robustness: write_robustness_csv(out, sweep_robustness(spec)); break;
    case SweepKind::Dimension: write_dimension_csv(out, sweep_dimension(spec)); break;
    case SweepKind::Rram: write_rram_csv(out, sweep_rram(spec)); break;
  }
}

}  // namespace hdoms
