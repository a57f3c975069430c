#include "hdoms/pipeline.hpp"

#include "hdoms/decoys.hpp"
#include "hdoms/error.hpp"
#include "hdoms/hv_store.hpp"
#include "hdoms/kv_config.hpp"
#include "hdoms/parallel.hpp"
#include "hdoms/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

namespace hdoms {

void PipelineConfig::validate() const {
  preprocess.validate();
  bins.validate();
  encoder.validate();
  if (!(window >= 0.0)) throw ConfigError("search window must be non-negative");
  if (k == 0) throw ConfigError("k must be at least 1");
  if (!(fdr_threshold > 0.0 && fdr_threshold < 1.0)) throw ConfigError("fdr threshold must lie in (0, 1)");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (emulation == EmulationMode::Simulate) {
    rram.validate();
    noise.validate();
  }
}

// ---------------------------------------------------------------------------
// Encoding metadata

std::string encoding_metadata(const PipelineConfig& cfg) {
  std::ostringstream out;
  const auto& e = cfg.encoder;
  const auto& p = cfg.preprocess;
  out << "dim = " << e.dim << '\n'
      << "levels = " << e.levels << '\n'
      << "id_precision_bits = " << e.id_precision_bits << '\n'
      << "chunked = " << (e.chunked ? "true" : "false") << '\n'
      << "chunk_count = " << e.chunk_count << '\n'
      << "seed = " << e.seed << '\n'
      << "bin_width = " << format_double(cfg.bins.bin_width) << '\n'
      << "min_mz = " << format_double(cfg.bins.min_mz) << '\n'
      << "max_mz = " << format_double(cfg.bins.max_mz) << '\n'
      << "threshold_fraction = " << format_double(p.threshold_fraction) << '\n'
      << "min_peaks = " << p.min_peaks << '\n'
      << "max_peaks = " << p.max_peaks << '\n'
      << "transform = " << (p.transform == IntensityTransform::Sqrt ? "sqrt" : "raw") << '\n'
      << "l2_normalize = " << (p.l2_normalize ? "true" : "false") << '\n';
  return out.str();
}

void apply_encoding_metadata(const std::string& metadata, PipelineConfig& cfg) {
  const auto kv = KvConfig::parse(metadata, "store metadata");
  kv.reject_unknown({"dim", "levels", "id_precision_bits", "chunked", "chunk_count", "seed", "bin_width", "min_mz",
                     "max_mz", "threshold_fraction", "min_peaks", "max_peaks", "transform", "l2_normalize"});
  const auto size = [&](const char* key, std::size_t fallback) {
    const auto v = kv.get_int(key);
    if (v && *v < 0) throw ConfigError(std::string("store metadata: negative ") + key);
    return v ? static_cast<std::size_t>(*v) : fallback;
  };
  auto& e = cfg.encoder;
  e.dim = size("dim", e.dim);
  e.levels = size("levels", e.levels);
  e.id_precision_bits = static_cast<unsigned>(size("id_precision_bits", e.id_precision_bits));
  e.chunked = kv.get_bool("chunked").value_or(e.chunked);
  e.chunk_count = size("chunk_count", e.chunk_count);
  e.seed = size("seed", e.seed);
  cfg.bins.bin_width = kv.get_double("bin_width").value_or(cfg.bins.bin_width);
  cfg.bins.min_mz = kv.get_double("min_mz").value_or(cfg.bins.min_mz);
  cfg.bins.max_mz = kv.get_double("max_mz").value_or(cfg.bins.max_mz);
  auto& p = cfg.preprocess;
  p.threshold_fraction = kv.get_double("threshold_fraction").value_or(p.threshold_fraction);
  p.min_peaks = size("min_peaks", p.min_peaks);
  p.max_peaks = size("max_peaks", p.max_peaks);
  if (const auto t = kv.get_string("transform")) {
    if (*t == "sqrt") p.transform = IntensityTransform::Sqrt;
    else if (*t == "raw") p.transform = IntensityTransform::Raw;
    else throw ConfigError("store metadata: unknown transform '" + *t + "'");
  }
  p.l2_normalize = kv.get_bool("l2_normalize").value_or(p.l2_normalize);
}

// ---------------------------------------------------------------------------
// Report

StageReport& RunReport::stage(const std::string& name) {
  for (auto& s : stages)
    if (s.name == name) return s;
  stages.push_back({name, 0, 0, 0.0});
  return stages.back();
}

namespace {

nlohmann::ordered_json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

std::string RunReport::to_json(const PipelineConfig& cfg) const {
  using nlohmann::ordered_json;
  ordered_json j;
  j["success"] = success;
  j["failed_stage"] = failed_stage.empty() ? ordered_json(nullptr) : ordered_json(failed_stage);
  j["error"] = error.empty() ? ordered_json(nullptr) : ordered_json(error);

  ordered_json c;
  c["dim"] = cfg.encoder.dim;
  c["levels"] = cfg.encoder.levels;
  c["id_precision_bits"] = cfg.encoder.id_precision_bits;
  c["chunked"] = cfg.encoder.chunked;
  c["chunk_count"] = cfg.encoder.chunk_count;
  c["encoder_seed"] = cfg.encoder.seed;
  c["window"] = number_or_inf(cfg.window);
  c["k"] = cfg.k;
  c["fdr_threshold"] = cfg.fdr_threshold;
  c["fdr_formula"] = cfg.fdr_formula == FdrFormula::DecoysOverTargets ? "decoys/targets" : "(decoys+1)/targets";
  c["decoys"] = cfg.decoys;
  c["decoy_seed"] = cfg.decoy_seed;
  c["emulation"] = cfg.emulation == EmulationMode::Bypass ? "bypass" : "simulate";
  if (cfg.emulation == EmulationMode::Simulate) {
    c["rram"] = {{"bits_per_cell", cfg.rram.bits_per_cell}, {"adc_bits", cfg.rram.adc_bits},
                 {"max_active_rows", cfg.rram.max_active_rows}, {"time_bucket", std::string(to_string(cfg.rram.time_bucket))},
                 {"seed", cfg.rram.seed}};
  }
  j["config"] = c;

  j["inputs"] = ordered_json::array();
  for (const auto& in : inputs)
    j["inputs"].push_back({{"path", in.path}, {"parsed", in.parsed}, {"skipped", in.skipped}, {"rejected", in.rejected}});
  j["stages"] = ordered_json::array();
  for (const auto& s : stages)
    j["stages"].push_back({{"name", s.name}, {"input", s.input}, {"output", s.output}, {"seconds", s.seconds}});
  j["counts"] = {{"queries", queries}, {"targets", targets}, {"decoys", decoys}, {"emulated_cycles", emulated_cycles}};
  j["fdr"] = {{"threshold_found", fdr.threshold_found},
              {"score_threshold", fdr.threshold_found ? ordered_json(fdr.score_threshold) : ordered_json(nullptr)},
              {"targets_above", fdr.targets_above},
              {"decoys_above", fdr.decoys_above},
              {"achieved_fdr", fdr.achieved_fdr},
              {"accepted", fdr.accepted.size()}};
  j["accepted"] = ordered_json::array();
  for (const auto& a : accepted)
    j["accepted"].push_back({{"query", a.query}, {"reference", a.reference}, {"similarity", a.similarity}});
  return j.dump(2) + "\n";
}

void PipelineResult::write_results_csv(std::ostream& out) const {
  hdoms::write_results_csv(out, matches, queries.names, reference_names);
}

void PipelineResult::write_accepted_csv(std::ostream& out) const {
  out << "query_id,reference_id,similarity\n";
  for (const auto& a : report.accepted) out << a.query << ',' << a.reference << ',' << a.similarity << '\n';
}

// ---------------------------------------------------------------------------
// Emulation

Hypervector emulate_encode(const BinnedVector& v, const Encoder& encoder, const RramConfig& rram,
                           const NoiseModel& noise, std::size_t* cycles) {
  const auto& ids = encoder.ids();
  const auto& lv = encoder.level_family();
  const std::size_t dim = encoder.config().dim;
  const auto terms = quantize_terms(v, lv.levels);
  if (cycles) *cycles = 0;
  if (terms.empty()) return sign_quantize(std::vector<std::int32_t>(dim, 0));

  const std::size_t rows = terms.size();
  const double w_max = static_cast<double>(ids.max_magnitude());
  std::vector<double> targets(2 * rows * dim);
  std::vector<std::uint64_t> keys(2 * rows);
  std::vector<std::int8_t> lv_inputs(rows * dim);
  std::vector<std::int8_t> id_row(dim);
  for (std::size_t r = 0; r < rows; ++r) {
    ids.fill_row(terms[r].bin, id_row);
    for (std::size_t d = 0; d < dim; ++d) {
      const auto pair = map_differential(id_row[d], w_max, rram.g_max);
      targets[(2 * r) * dim + d] = pair.g_plus;
      targets[(2 * r + 1) * dim + d] = pair.g_minus;
      lv_inputs[r * dim + d] = static_cast<std::int8_t>(lv.vectors[terms[r].level].get(d));
    }
    keys[2 * r] = 2 * static_cast<std::uint64_t>(terms[r].bin);
    keys[2 * r + 1] = 2 * static_cast<std::uint64_t>(terms[r].bin) + 1;
  }

  CrossbarTile tile(2 * rows, dim, TileMode::Differential, 1U << ids.precision_bits(), rram.g_max);
  tile.program(targets, noise, rram.time_bucket, rram.seed, keys);
  const auto mode = encoder.config().chunked ? EncodeMode::Chunked : EncodeMode::Naive;
  const auto result = encode_elementwise(tile, lv_inputs, mode, encoder.config().chunk_count, rram, w_max);
  if (cycles) *cycles = result.cycles;

  std::vector<std::int32_t> sums(dim);
  for (std::size_t d = 0; d < dim; ++d) sums[d] = static_cast<std::int32_t>(std::llround(result.sums[d]));
  return sign_quantize(sums);
}

Hypervector emulate_storage(const Hypervector& h, const RramConfig& rram, const NoiseModel& noise,
                            std::uint64_t key) {
  const unsigned n = rram.bits_per_cell;
  const std::size_t dim = h.dim();
  const std::size_t cells = (dim + n - 1) / n;
  const double h_max = static_cast<double>((1U << n) - 1U);
  const double sigma = noise.sigma(1U << n, rram.time_bucket) * rram.g_max;
  const CounterRng rng(rram.seed, Stream::StorageNoise, key);

  Hypervector out(dim);
  for (std::size_t s = 0; s < cells; ++s) {
    std::uint32_t value = 0;
    for (unsigned k = 0; k < n; ++k) {
      const std::size_t d = s * n + k;
      value = (value << 1) | (d < dim && h.get(d) > 0 ? 1U : 0U);
    }
    double g = static_cast<double>(value) / h_max * rram.g_max;
    if (sigma > 0.0) g = std::clamp(g + sigma * rng.normal_at(s), 0.0, rram.g_max);
    const auto level = static_cast<std::uint32_t>(std::clamp(std::round(g / rram.g_max * h_max), 0.0, h_max));
    for (unsigned k = 0; k < n; ++k) {
      const std::size_t d = s * n + k;
      if (d < dim && ((level >> (n - 1 - k)) & 1U)) out.set(d, 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
public:
  StageTimer(RunReport& report, std::string name) : report_(report), name_(std::move(name)), start_(Clock::now()) {}
  ~StageTimer() {
    report_.stage(name_).seconds += std::chrono::duration<double>(Clock::now() - start_).count();
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

private:
  RunReport& report_;
  std::string name_;
  Clock::time_point start_;
};

/// Runs fn, converting any exception into a StageError tagged with `stage`.
template <typename Fn>
auto in_stage(RunReport& report, const std::string& stage, Fn&& fn) {
  StageTimer timer(report, stage);
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

struct Context {
  const PipelineConfig& cfg;
  RunReport& report;
  std::optional<Encoder> encoder;

  const Encoder& enc() {
    if (!encoder) encoder.emplace(in_stage(report, "encode", [&] { return Encoder(cfg.encoder, cfg.bins); }));
    return *encoder;
  }
};

std::vector<std::optional<Spectrum>> preprocess_batch(Context& ctx, std::span<const Spectrum> batch) {
  return in_stage(ctx.report, "preprocess", [&] {
    std::vector<std::optional<Spectrum>> out(batch.size());
    parallel_for(batch.size(), ctx.cfg.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) out[i] = try_preprocess(batch[i], ctx.cfg.preprocess);
    });
    auto& st = ctx.report.stage("preprocess");
    st.input += batch.size();
    st.output += static_cast<std::size_t>(std::count_if(out.begin(), out.end(), [](const auto& s) { return s.has_value(); }));
    return out;
  });
}

std::vector<Hypervector> encode_spectra(Context& ctx, std::span<const Spectrum> spectra) {
  const Encoder& enc = ctx.enc();
  return in_stage(ctx.report, "encode", [&] {
    std::vector<Hypervector> out(spectra.size());
    if (ctx.cfg.emulation == EmulationMode::Simulate) {
      std::vector<std::size_t> cycles(spectra.size());
      parallel_for(spectra.size(), ctx.cfg.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
          out[i] = emulate_encode(bin(spectra[i], ctx.cfg.bins), enc, ctx.cfg.rram, ctx.cfg.noise, &cycles[i]);
      });
      for (const auto c : cycles) ctx.report.emulated_cycles += c;
    } else {
      out = enc.encode_batch(spectra, ctx.cfg.threads);
    }
    auto& st = ctx.report.stage("encode");
    st.input += spectra.size();
    st.output += out.size();
    return out;
  });
}

using SpectrumSource = std::function<std::optional<Spectrum>()>;

EncodedQueries build_queries(Context& ctx, const SpectrumSource& next) {
  std::vector<Spectrum> raw;
  in_stage(ctx.report, "ingest", [&] {
    while (auto s = next()) raw.push_back(std::move(*s));
    return 0;
  });
  const auto pre = preprocess_batch(ctx, raw);
  std::vector<Spectrum> kept;
  for (const auto& p : pre)
    if (p) kept.push_back(*p);
  if (kept.empty()) throw StageError("preprocess", "no query spectrum survived preprocessing");

  EncodedQueries q;
  q.vectors = encode_spectra(ctx, kept);
  for (const auto& s : kept) {
    q.masses.push_back(s.precursor_mass);
    q.names.push_back(s.id);
  }
  return q;
}

struct LibraryBuffers {
  std::size_t dim = 0;
  std::vector<std::uint64_t> words;
  std::vector<double> masses;
  std::vector<std::uint8_t> flags;
  std::vector<std::string> names;
  std::vector<int> charges;

  void add(const Hypervector& h, const Spectrum& s) {
    words.insert(words.end(), h.words().begin(), h.words().end());
    masses.push_back(s.precursor_mass);
    flags.push_back(s.is_decoy ? 1 : 0);
    names.push_back(s.id);
    charges.push_back(s.precursor_charge);
  }
  void append(LibraryBuffers&& o) {
    words.insert(words.end(), o.words.begin(), o.words.end());
    masses.insert(masses.end(), o.masses.begin(), o.masses.end());
    flags.insert(flags.end(), o.flags.begin(), o.flags.end());
    for (auto& n : o.names) names.push_back(std::move(n));
    charges.insert(charges.end(), o.charges.begin(), o.charges.end());
  }
};

std::unique_ptr<DecoyGenerator> make_decoy_generator(const PipelineConfig& cfg) {
  CyclicShiftDecoys::Options opt;
  opt.min_mz = cfg.bins.min_mz;
  opt.max_mz = cfg.bins.max_mz;
  opt.seed = cfg.decoy_seed;
  return std::make_unique<CyclicShiftDecoys>(opt);
}

/// Streams references in batches: targets keep insertion order, decoys follow all targets.
EncodedLibrary build_library(Context& ctx, const SpectrumSource& next) {
  const auto& cfg = ctx.cfg;
  const auto decoy_gen = make_decoy_generator(cfg);
  LibraryBuffers targets;
  LibraryBuffers decoys;
  std::size_t ordinal = 0;

  while (true) {
    std::vector<Spectrum> batch;
    in_stage(ctx.report, "ingest", [&] {
      while (batch.size() < cfg.batch_size) {
        auto s = next();
        if (!s) break;
        batch.push_back(std::move(*s));
      }
      return 0;
    });
    if (batch.empty()) break;
    const auto pre = preprocess_batch(ctx, batch);
    std::vector<Spectrum> kept;
    for (const auto& p : pre)
      if (p) kept.push_back(*p);

    std::vector<Spectrum> batch_decoys;
    if (cfg.decoys && !kept.empty()) {
      batch_decoys = in_stage(ctx.report, "decoys", [&] {
        auto d = generate_decoys(kept, *decoy_gen, ordinal);
        auto& st = ctx.report.stage("decoys");
        st.input += kept.size();
        st.output += d.size();
        return d;
      });
    }
    ordinal += kept.size();

    const auto tv = encode_spectra(ctx, kept);
    for (std::size_t i = 0; i < kept.size(); ++i) targets.add(tv[i], kept[i]);
    const auto dv = encode_spectra(ctx, batch_decoys);
    for (std::size_t i = 0; i < batch_decoys.size(); ++i) decoys.add(dv[i], batch_decoys[i]);
  }
  if (targets.masses.empty()) throw StageError("preprocess", "no reference spectrum survived preprocessing");

  EncodedLibrary lib;
  lib.targets = targets.masses.size();
  lib.decoys = decoys.masses.size();
  targets.append(std::move(decoys));
  lib.names = std::move(targets.names);
  lib.charges = std::move(targets.charges);
  lib.index = ReferenceIndex::from_packed(cfg.encoder.dim, std::move(targets.words), std::move(targets.masses),
                                          std::move(targets.flags));
  return lib;
}

EncodedLibrary library_from_store(const HvStore& store) {
  if (store.precision_bits != 1) throw FormatError("reference store must hold binary hypervectors");
  std::vector<std::uint64_t> words;
  words.reserve(store.count() * store.dim / 64);
  std::vector<double> masses;
  std::vector<std::uint8_t> flags;
  EncodedLibrary lib;
  for (std::size_t i = 0; i < store.count(); ++i) {
    const auto& h = store.binary[i];
    words.insert(words.end(), h.words().begin(), h.words().end());
    const auto& r = store.records[i];
    masses.push_back(r.precursor_mass);
    flags.push_back(r.is_decoy ? 1 : 0);
    lib.names.push_back(r.id);
    lib.charges.push_back(r.precursor_charge);
    (r.is_decoy ? lib.decoys : lib.targets) += 1;
  }
  lib.index = ReferenceIndex::from_packed(store.dim, std::move(words), std::move(masses), std::move(flags));
  return lib;
}

EncodedQueries queries_from_store(const HvStore& store) {
  if (store.precision_bits != 1) throw FormatError("query store must hold binary hypervectors");
  EncodedQueries q;
  q.vectors = store.binary;
  for (const auto& r : store.records) {
    q.masses.push_back(r.precursor_mass);
    q.names.push_back(r.id);
  }
  return q;
}

void emulate_reference_storage(Context& ctx, EncodedLibrary& lib) {
  in_stage(ctx.report, "emulate", [&] {
    auto& index = lib.index;
    const std::size_t wpr = index.words_per_row();
    auto words = index.mutable_words();
    parallel_for(index.size(), ctx.cfg.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t pos = b; pos < e; ++pos) {
        const auto row = index.row(pos);
        const auto h = Hypervector::from_words(index.dim(), row);
        const auto read = emulate_storage(h, ctx.cfg.rram, ctx.cfg.noise, index.reference_id(pos));
        std::copy(read.words().begin(), read.words().end(), words.begin() + static_cast<std::ptrdiff_t>(pos * wpr));
      }
    });
    auto& st = ctx.report.stage("emulate");
    st.input += index.size();
    st.output += index.size();
    return 0;
  });
}

void search_and_filter(Context& ctx, EncodedLibrary& lib, PipelineResult& result) {
  const auto& cfg = ctx.cfg;
  if (cfg.emulation == EmulationMode::Simulate) emulate_reference_storage(ctx, lib);
  if (!result.queries.vectors.empty() && result.queries.vectors.front().dim() != lib.index.dim())
    throw StageError("search", "query dimension " + std::to_string(result.queries.vectors.front().dim()) +
                                   " does not match reference dimension " + std::to_string(lib.index.dim()));
  result.matches = in_stage(ctx.report, "search", [&] {
    SearchParams params;
    params.window = cfg.window;
    params.k = cfg.k;
    params.threads = cfg.threads;
    auto m = batch_search(result.queries.vectors, result.queries.masses, lib.index, params);
    auto& st = ctx.report.stage("search");
    st.input += result.queries.vectors.size();
    for (const auto& v : m) st.output += v.size();
    return m;
  });
  ctx.report.fdr = in_stage(ctx.report, "fdr", [&] {
    const auto best = best_matches(result.matches);
    auto f = fdr_filter(best, cfg.fdr_threshold, cfg.fdr_formula);
    auto& st = ctx.report.stage("fdr");
    st.input += best.size();
    st.output += f.accepted.size();
    return f;
  });
  for (const auto& m : ctx.report.fdr.accepted)
    ctx.report.accepted.push_back({result.queries.names[m.query_id], lib.names[m.reference_id], m.similarity});
  result.reference_names = std::move(lib.names);
  ctx.report.queries = result.queries.vectors.size();
  ctx.report.targets = lib.targets;
  ctx.report.decoys = lib.decoys;
}

void order_stages(RunReport& report) {
  static const std::vector<std::string> canonical = {"config", "ingest", "preprocess", "decoys", "encode",
                                                     "emulate", "search", "fdr"};
  const auto rank = [](const std::string& name) {
    return static_cast<std::size_t>(std::find(canonical.begin(), canonical.end(), name) - canonical.begin());
  };
  std::stable_sort(report.stages.begin(), report.stages.end(),
                   [&](const StageReport& a, const StageReport& b) { return rank(a.name) < rank(b.name); });
}

void record_failure(RunReport& report, const std::string& stage, const std::string& what) {
  report.success = false;
  report.failed_stage = stage;
  report.error = what;
}

}  // namespace

PipelineResult run_pipeline(const std::filesystem::path& query_path, const std::filesystem::path& ref_path,
                            PipelineConfig cfg) {
  PipelineResult result;
  auto& report = result.report;
  try {
    in_stage(report, "config", [&] { cfg.validate(); return 0; });

    std::optional<HvStore> ref_store;
    std::optional<HvStore> query_store;
    in_stage(report, "ingest", [&] {
      if (is_hv_store(ref_path)) ref_store = read_hv_store(ref_path);
      if (is_hv_store(query_path)) query_store = read_hv_store(query_path);
      if (ref_store && query_store && ref_store->metadata != query_store->metadata)
        throw ConfigError("query and reference stores were encoded with different settings");
      if (ref_store) apply_encoding_metadata(ref_store->metadata, cfg);
      else if (query_store) apply_encoding_metadata(query_store->metadata, cfg);
      cfg.validate();
      return 0;
    });
    Context ctx{cfg, report, std::nullopt};

    if (query_store) {
      result.queries = queries_from_store(*query_store);
      report.inputs.push_back({query_path.string(), query_store->count(), 0, 0});
      report.stage("ingest").output += query_store->count();
      query_store.reset();
    } else {
      auto reader = in_stage(report, "ingest", [&] { return std::make_unique<MgfReader>(query_path); });
      const auto before = report.stage("preprocess").output;
      result.queries = build_queries(ctx, [&] { return reader->next(); });
      const std::size_t kept = report.stage("preprocess").output - before;
      report.inputs.push_back({query_path.string(), reader->parsed(), reader->skipped(), reader->parsed() - kept});
      report.stage("ingest").output += reader->parsed();
    }

    EncodedLibrary lib;
    if (ref_store) {
      lib = in_stage(report, "ingest", [&] { return library_from_store(*ref_store); });
      report.inputs.push_back({ref_path.string(), ref_store->count(), 0, 0});
      report.stage("ingest").output += ref_store->count();
      ref_store.reset();
    } else {
      auto reader = in_stage(report, "ingest", [&] { return std::make_unique<MgfReader>(ref_path); });
      const auto before = report.stage("preprocess").output;
      lib = build_library(ctx, [&] { return reader->next(); });
      const std::size_t kept = report.stage("preprocess").output - before;
      report.inputs.push_back({ref_path.string(), reader->parsed(), reader->skipped(), reader->parsed() - kept});
      report.stage("ingest").output += reader->parsed();
    }
    search_and_filter(ctx, lib, result);
    report.success = true;
  } catch (const StageError& e) {
    record_failure(report, e.stage(), e.what());
  } catch (const std::exception& e) {
    record_failure(report, "pipeline", e.what());
  }
  order_stages(report);
  return result;
}

PipelineResult run_pipeline(std::span<const Spectrum> queries, std::span<const Spectrum> references,
                            const PipelineConfig& cfg) {
  PipelineResult result;
  auto& report = result.report;
  try {
    in_stage(report, "config", [&] { cfg.validate(); return 0; });
    Context ctx{cfg, report, std::nullopt};
    if (queries.empty()) throw StageError("ingest", "no query spectra");
    if (references.empty()) throw StageError("ingest", "no reference spectra");
    std::size_t qi = 0;
    result.queries = build_queries(ctx, [&]() -> std::optional<Spectrum> {
      if (qi == queries.size()) return std::nullopt;
      return queries[qi++];
    });
    std::size_t ri = 0;
    auto lib = build_library(ctx, [&]() -> std::optional<Spectrum> {
      if (ri == references.size()) return std::nullopt;
      return references[ri++];
    });
    search_and_filter(ctx, lib, result);
    report.success = true;
  } catch (const StageError& e) {
    record_failure(report, e.stage(), e.what());
  } catch (const std::exception& e) {
    record_failure(report, "pipeline", e.what());
  }
  order_stages(report);
  return result;
}

EncodeSummary encode_to_store(std::span<const std::filesystem::path> inputs, const std::filesystem::path& out,
                              const PipelineConfig& cfg) {
  cfg.validate();
  if (inputs.empty()) throw ConfigError("no input files");
  RunReport scratch;
  Context ctx{cfg, scratch, std::nullopt};
  const auto decoy_gen = make_decoy_generator(cfg);

  EncodeSummary summary;
  HvStoreWriter writer(out, cfg.encoder.dim, 1, encoding_metadata(cfg));
  std::vector<std::pair<Hypervector, HvRecord>> pending_decoys;
  std::size_t ordinal = 0;
  for (const auto& path : inputs) {
    MgfReader reader(path);
    IngestReport ingest{path.string(), 0, 0, 0};
    while (true) {
      std::vector<Spectrum> batch;
      while (batch.size() < cfg.batch_size) {
        auto s = reader.next();
        if (!s) break;
        batch.push_back(std::move(*s));
      }
      if (batch.empty()) break;
      const auto pre = preprocess_batch(ctx, batch);
      std::vector<Spectrum> kept;
      for (const auto& p : pre)
        if (p) kept.push_back(*p);
      ingest.rejected += batch.size() - kept.size();
      const auto vectors = encode_spectra(ctx, kept);
      for (std::size_t i = 0; i < kept.size(); ++i)
        writer.add(vectors[i], {kept[i].id, kept[i].precursor_mass, kept[i].precursor_charge, false});
      if (cfg.decoys && !kept.empty()) {
        const auto d = generate_decoys(kept, *decoy_gen, ordinal);
        const auto dv = encode_spectra(ctx, d);
        for (std::size_t i = 0; i < d.size(); ++i)
          pending_decoys.emplace_back(dv[i], HvRecord{d[i].id, d[i].precursor_mass, d[i].precursor_charge, true});
      }
      ordinal += kept.size();
    }
    ingest.parsed = reader.parsed();
    ingest.skipped = reader.skipped();
    summary.inputs.push_back(ingest);
  }
  summary.written = writer.count();
  if (summary.written == 0) throw EmptySpectrum("no spectrum survived preprocessing");
  for (auto& [h, r] : pending_decoys) writer.add(h, std::move(r));
  summary.decoys = pending_decoys.size();
  summary.written = writer.count();
  writer.finish();
  return summary;
}

}  // namespace hdoms
