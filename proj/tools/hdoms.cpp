// hdoms: command line front end for encoding, searching, sweeps and crossbar measurements.

#include "cli_config.hpp"

#include "hdoms/decoys.hpp"
#include "hdoms/error.hpp"
#include "hdoms/experiments.hpp"
#include "hdoms/mgf.hpp"
#include "hdoms/pipeline.hpp"
#include "hdoms/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

using namespace hdoms;

struct Globals {
  unsigned threads = 0;
  bool threads_set = false;
  bool quiet = false;
  std::string config;
};

Globals g;

void info(const std::string& stage, const std::string& msg) {
  if (!g.quiet) std::cerr << "[" << stage << "] " << msg << '\n';
}

void fail(const std::string& stage, const std::string& msg) { std::cerr << "[" << stage << "] error: " << msg << '\n'; }

/// Output stream for `path`, or stdout for "" / "-".
class Output {
public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw IoError("cannot open " + path + " for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    if (!file_) {
      std::cout.flush();
      return;
    }
    file_->close();
    if (!*file_) throw IoError("write failed");
  }

private:
  std::unique_ptr<std::ofstream> file_;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

/// Registers --flag that stores its raw value under `key` in the override map.
void kv_option(CLI::App* app, std::map<std::string, std::string>& overrides, const std::string& flag,
               const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
}

void kv_flag(CLI::App* app, std::map<std::string, std::string>& overrides, const std::string& flag,
             const std::string& key, const std::string& value, const std::string& help) {
  app->add_flag_callback(flag, [&overrides, key, value] { overrides[key] = value; }, help);
}

void encoder_options(CLI::App* app, std::map<std::string, std::string>& o) {
  kv_option(app, o, "--dim", "dim", "Hypervector dimension D (multiple of 64)");
  kv_option(app, o, "--levels", "levels", "Intensity quantization levels Q");
  kv_option(app, o, "--id-bits", "id_precision_bits", "ID hypervector precision in bits (1-3)");
  kv_flag(app, o, "--chunked", "chunked", "true", "Use chunk-constant level hypervectors");
  kv_option(app, o, "--chunk-count", "chunk_count", "Chunks per hypervector when --chunked");
  kv_option(app, o, "--seed", "encoder_seed", "Seed of the ID and level families");
  kv_option(app, o, "--bin-width", "bin_width", "m/z bin width in Th");
  kv_option(app, o, "--min-peaks", "min_peaks", "Minimum peaks kept by preprocessing");
  kv_option(app, o, "--max-peaks", "max_peaks", "Maximum peaks kept by preprocessing");
  kv_option(app, o, "--batch-size", "batch_size", "Spectra per streaming batch");
}

void emulation_options(CLI::App* app, std::map<std::string, std::string>& o) {
  kv_flag(app, o, "--emulate", "emulation", "simulate", "Run binding and reference storage on the simulated crossbar");
  kv_option(app, o, "--noise", "noise_config", "Relaxation sigma table (key = value file)");
  kv_option(app, o, "--sigma", "noise_sigma", "Use one relaxation sigma for every cell type");
  kv_option(app, o, "--cell-bits", "rram.bits_per_cell", "Bits per storage cell (1-3)");
  kv_option(app, o, "--adc-bits", "rram.adc_bits", "ADC resolution, 0 for an ideal ADC");
  kv_option(app, o, "--time-bucket", "rram.time_bucket", "Relaxation time: t0, 30min, 60min or 1day");
  kv_option(app, o, "--rram-seed", "rram.seed", "Seed of the cell noise");
}

PipelineConfig resolve(std::map<std::string, std::string> overrides) {
  if (g.threads_set) overrides["threads"] = std::to_string(g.threads);
  return cli::merge_pipeline_config(g.config, overrides);
}

// --- encode ---------------------------------------------------------------

struct EncodeArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::string report;
  std::map<std::string, std::string> overrides;
};

int run_encode(EncodeArgs& a) {
  PipelineConfig cfg;
  try {
    if (!a.overrides.count("decoys")) a.overrides["decoys"] = "false";
    cfg = resolve(a.overrides);
  } catch (const Error& e) {
    fail("config", e.what());
    return 2;
  }
  try {
    std::vector<std::filesystem::path> paths(a.inputs.begin(), a.inputs.end());
    const auto summary = encode_to_store(paths, a.out, cfg);
    write_ingest_csv(std::cout, summary.inputs);
    info("encode", std::to_string(summary.written) + " hypervectors (" + std::to_string(summary.decoys) +
                       " decoys) written to " + a.out);
    if (!a.report.empty()) {
      RunReport report;
      report.success = true;
      report.inputs = summary.inputs;
      report.targets = summary.written - summary.decoys;
      report.decoys = summary.decoys;
      write_file(a.report, report.to_json(cfg));
    }
    return 0;
  } catch (const Error& e) {
    std::filesystem::remove(a.out);
    fail("encode", e.what());
    return 1;
  }
}

// --- search ---------------------------------------------------------------

struct SearchArgs {
  std::string queries;
  std::string references;
  std::string out;
  std::string report;
  std::string accepted;
  std::map<std::string, std::string> overrides;
};

int run_search(SearchArgs& a) {
  PipelineConfig cfg;
  try {
    cfg = resolve(a.overrides);
  } catch (const Error& e) {
    fail("config", e.what());
    return 2;
  }
  const auto result = run_pipeline(a.queries, a.references, cfg);
  try {
    if (!a.report.empty()) write_file(a.report, result.report.to_json(cfg));
    if (!result.report.success) {
      fail(result.report.failed_stage, result.report.error);
      return 1;
    }
    Output out(a.out);
    result.write_results_csv(out.stream());
    out.close();
    if (!a.accepted.empty()) {
      Output acc(a.accepted);
      result.write_accepted_csv(acc.stream());
      acc.close();
    }
    const auto& r = result.report;
    info("search", std::to_string(r.queries) + " queries against " + std::to_string(r.targets) + " targets + " +
                       std::to_string(r.decoys) + " decoys");
    info("fdr", std::to_string(r.fdr.accepted.size()) + " identifications accepted at FDR " +
                    format_double(r.fdr.achieved_fdr));
    return 0;
  } catch (const Error& e) {
    fail("output", e.what());
    return 1;
  }
}

// --- sweep ----------------------------------------------------------------

int run_sweep_cmd(const std::string& spec_path, const std::string& out_path) {
  SweepSpec spec;
  try {
    spec = SweepSpec::load(spec_path);
    if (g.threads_set) spec.eval.threads = g.threads;
  } catch (const Error& e) {
    fail("config", e.what());
    return 2;
  }
  try {
    info("sweep", std::string("running ") + std::string(to_string(spec.kind)) + " sweep over " +
                      std::to_string(spec.seeds.size()) + " seeds");
    Output out(out_path);
    run_sweep(spec, out.stream());
    out.close();
    return 0;
  } catch (const Error& e) {
    fail("sweep", e.what());
    return 1;
  }
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string noise;
  double sigma = -1.0;
  std::vector<unsigned> bits{1, 2, 3};
  std::vector<std::size_t> rows{4, 16, 64};
  std::vector<std::string> buckets{"t0", "30min", "60min", "1day"};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t vectors = 100;
  std::size_t dim = 1536;
  std::size_t trials = 200;
  std::size_t cols = 32;
  unsigned adc_bits = 8;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  SweepSpec spec;
  try {
    spec.kind = SweepKind::Rram;
    spec.cell_bits = a.bits;
    spec.rows = a.rows;
    spec.time_buckets.clear();
    for (const auto& b : a.buckets) spec.time_buckets.push_back(parse_time_bucket(b));
    spec.seeds = a.seeds;
    spec.ber_options.vectors = a.vectors;
    spec.ber_options.dim = a.dim;
    spec.nmse_options.trials = a.trials;
    spec.nmse_options.cols = a.cols;
    spec.rram.adc_bits = a.adc_bits;
    if (!a.noise.empty() && a.sigma >= 0.0) throw ConfigError("give either --noise or --sigma, not both");
    if (!a.noise.empty()) spec.noise = NoiseModel::load(a.noise);
    if (a.sigma >= 0.0) spec.noise = NoiseModel::constant(a.sigma);
    if (g.threads_set) spec.eval.threads = g.threads;
    spec.validate_axes();
  } catch (const Error& e) {
    fail("config", e.what());
    return 2;
  }
  try {
    Output out(a.out);
    write_rram_csv(out.stream(), sweep_rram(spec));
    out.close();
    info("simulate", std::to_string(a.bits.size() * a.rows.size() * spec.time_buckets.size() * a.seeds.size()) +
                         " grid points measured");
    return 0;
  } catch (const Error& e) {
    fail("simulate", e.what());
    return 1;
  }
}

// --- decoys ---------------------------------------------------------------

int run_decoys(const std::string& in, const std::string& out_path, std::uint64_t seed) {
  try {
    const auto targets = load_mgf(in);
    CyclicShiftDecoys::Options opt;
    opt.seed = seed;
    const auto decoys = generate_decoys(targets, CyclicShiftDecoys(opt));
    Output out(out_path);
    write_mgf(out.stream(), decoys);
    out.close();
    info("decoys", std::to_string(decoys.size()) + " decoys generated");
    return 0;
  } catch (const Error& e) {
    fail("decoys", e.what());
    return 1;
  }
}

// --- synth ----------------------------------------------------------------

int run_synth(const SyntheticBenchSpec& spec, const std::string& lib, const std::string& queries,
              const std::string& truth) {
  try {
    const auto bench = generate_synthetic_bench(spec);
    write_mgf(std::filesystem::path(lib), bench.library);
    write_mgf(std::filesystem::path(queries), bench.queries);
    if (!truth.empty()) {
      Output out(truth);
      out.stream() << "query_id,reference_id\n";
      for (std::size_t j = 0; j < bench.queries.size(); ++j)
        out.stream() << bench.queries[j].id << ',' << bench.library[bench.truth[j]].id << '\n';
      out.close();
    }
    info("synth", std::to_string(bench.library.size()) + " library and " + std::to_string(bench.queries.size()) +
                      " query spectra written");
    return 0;
  } catch (const Error& e) {
    fail("synth", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperdimensional open modification search with an RRAM crossbar simulator"};
  app.require_subcommand(1);
  app.add_option("--threads", g.threads, "Worker threads (default: all cores)")
      ->each([](const std::string&) { g.threads_set = true; });
  app.add_flag("-q,--quiet", g.quiet, "Only errors on stderr; stdout carries data only");
  app.add_option("--config", g.config, "key = value configuration file (flags take precedence)")
      ->check(CLI::ExistingFile);

  int code = 0;

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "Encode MGF spectra into an HDV1 hypervector store");
  encode->add_option("inputs", enc.inputs, "MGF input files")->required();
  encode->add_option("-o,--out", enc.out, "Output store path")->required();
  encode->add_option("--report", enc.report, "Write a JSON run report");
  kv_flag(encode, enc.overrides, "--decoys", "decoys", "true", "Append one decoy per spectrum");
  kv_option(encode, enc.overrides, "--decoy-seed", "decoy_seed", "Seed of the decoy shifts");
  encoder_options(encode, enc.overrides);
  kv_flag(encode, enc.overrides, "--emulate", "emulation", "simulate", "Bind on the simulated crossbar");
  kv_option(encode, enc.overrides, "--noise", "noise_config", "Relaxation sigma table");
  kv_option(encode, enc.overrides, "--sigma", "noise_sigma", "Use one relaxation sigma for every cell type");
  kv_option(encode, enc.overrides, "--adc-bits", "rram.adc_bits", "ADC resolution, 0 for an ideal ADC");
  encode->callback([&] { code = run_encode(enc); });

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "Search queries against a reference library and apply the FDR filter");
  search->add_option("queries", sa.queries, "Query MGF file or HDV1 store")->required();
  search->add_option("references", sa.references, "Reference MGF file or HDV1 store")->required();
  search->add_option("-o,--out", sa.out, "Results CSV (default stdout)");
  search->add_option("--report", sa.report, "Write the JSON run report");
  search->add_option("--accepted", sa.accepted, "Write accepted identifications as CSV");
  kv_option(search, sa.overrides, "--window", "window", "Precursor mass window in Da, or inf");
  kv_option(search, sa.overrides, "--mode", "mode", "open (500 Da) or standard (0.05 Da)");
  kv_option(search, sa.overrides, "-k", "k", "Matches reported per query");
  kv_option(search, sa.overrides, "--fdr", "fdr_threshold", "FDR threshold in (0, 1)");
  kv_option(search, sa.overrides, "--fdr-formula", "fdr_formula", "decoys or decoys+1");
  kv_flag(search, sa.overrides, "--no-decoys", "decoys", "false", "Do not add decoys to MGF references");
  kv_option(search, sa.overrides, "--decoy-seed", "decoy_seed", "Seed of the decoy shifts");
  encoder_options(search, sa.overrides);
  emulation_options(search, sa.overrides);
  search->callback([&] { code = run_search(sa); });

  std::string spec_path;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Run an experiment sweep from a spec file");
  sweep->add_option("spec", spec_path, "Sweep spec (key = value)")->required();
  sweep->add_option("-o,--out", sweep_out, "Output CSV (default stdout)");
  sweep->callback([&] { code = run_sweep_cmd(spec_path, sweep_out); });

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Measure storage BER and MVM NMSE of the crossbar model");
  simulate->add_option("--noise", sim.noise, "Relaxation sigma table (default: built-in)");
  simulate->add_option("--sigma", sim.sigma, "Use one relaxation sigma for every cell type");
  simulate->add_option("--bits", sim.bits, "Bits per cell")->delimiter(',');
  simulate->add_option("--rows", sim.rows, "Activated rows")->delimiter(',');
  simulate->add_option("--buckets", sim.buckets, "Time buckets")->delimiter(',');
  simulate->add_option("--seeds", sim.seeds, "Seeds")->delimiter(',');
  simulate->add_option("--vectors", sim.vectors, "Hypervectors stored per BER measurement");
  simulate->add_option("--dim", sim.dim, "Dimension of the stored hypervectors");
  simulate->add_option("--trials", sim.trials, "MVMs per NMSE measurement");
  simulate->add_option("--cols", sim.cols, "Columns per MVM");
  simulate->add_option("--adc-bits", sim.adc_bits, "ADC resolution, 0 for an ideal ADC");
  simulate->add_option("-o,--out", sim.out, "Output CSV (default stdout)");
  simulate->callback([&] { code = run_simulate(sim); });

  std::string decoy_in;
  std::string decoy_out;
  std::uint64_t decoy_seed = 1;
  auto* decoys = app.add_subcommand("decoys", "Write one cyclic-shift decoy per spectrum of an MGF file");
  decoys->add_option("input", decoy_in, "Target MGF file")->required();
  decoys->add_option("-o,--out", decoy_out, "Decoy MGF (default stdout)");
  decoys->add_option("--seed", decoy_seed, "Seed of the shifts");
  decoys->callback([&] { code = run_decoys(decoy_in, decoy_out, decoy_seed); });

  SyntheticBenchSpec synth_spec;
  synth_spec.library_size = 1000;
  synth_spec.query_count = 100;
  std::string synth_lib;
  std::string synth_queries;
  std::string synth_truth;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic library and perturbed queries as MGF");
  synth->add_option("--library-size", synth_spec.library_size, "Library spectra");
  synth->add_option("--query-count", synth_spec.query_count, "Query spectra");
  synth->add_option("--seed", synth_spec.seed, "Generator seed");
  synth->add_option("--family-size", synth_spec.family_size, "Library spectra per family of similar spectra");
  synth->add_option("--family-shared", synth_spec.family_shared_fraction, "Peak share within a family");
  synth->add_option("--library", synth_lib, "Library MGF output")->required();
  synth->add_option("--queries", synth_queries, "Query MGF output")->required();
  synth->add_option("--truth", synth_truth, "Ground truth CSV output");
  synth->callback([&] { code = run_synth(synth_spec, synth_lib, synth_queries, synth_truth); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return code;
}
