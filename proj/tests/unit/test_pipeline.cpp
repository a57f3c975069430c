#include "hdoms/error.hpp"
#include "hdoms/experiments.hpp"
#include "hdoms/hv_store.hpp"
#include "hdoms/pipeline.hpp"
#include "hdoms/synthetic.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sstream>

using namespace hdoms;

namespace {

SyntheticBench small_bench(std::uint64_t seed = 1, std::size_t library = 300, std::size_t queries = 40) {
  SyntheticBenchSpec spec;
  spec.library_size = library;
  spec.query_count = queries;
  spec.seed = seed;
  return generate_synthetic_bench(spec);
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.encoder.dim = 1024;
  cfg.fdr_threshold = 0.05;
  cfg.threads = 1;
  return cfg;
}

std::string results_csv(const PipelineResult& r) {
  std::ostringstream out;
  r.write_results_csv(out);
  return out.str();
}

std::string accepted_csv(const PipelineResult& r) {
  std::ostringstream out;
  r.write_accepted_csv(out);
  return out.str();
}

}  // namespace

TEST(Synthetic, DeterministicAndWellFormed) {
  const auto a = small_bench(4);
  const auto b = small_bench(4);
  EXPECT_EQ(a.library, b.library);
  EXPECT_EQ(a.queries, b.queries);
  EXPECT_EQ(a.truth, b.truth);
  ASSERT_EQ(a.library.size(), 300U);
  ASSERT_EQ(a.queries.size(), 40U);
  EXPECT_EQ(a.library[7].id, "ref_7");
  EXPECT_EQ(a.queries[3].id, "query_3");
  for (auto t : a.truth) EXPECT_LT(t, 300U);
  EXPECT_NE(small_bench(5).library, a.library);
}

TEST(Synthetic, RejectsInvalidRates) {
  SyntheticBenchSpec spec;
  spec.peak_dropout = 1.5;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = SyntheticBenchSpec{};
  spec.family_shared_fraction = -0.1;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = SyntheticBenchSpec{};
  spec.library_size = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

// ---------------------------------------------------------------------------

TEST(Pipeline, RunsAndReportsStages) {
  const auto bench = small_bench();
  const auto r = run_pipeline(bench.queries, bench.library, small_config());
  ASSERT_TRUE(r.report.success) << r.report.error;
  EXPECT_EQ(r.report.queries, bench.queries.size());
  EXPECT_EQ(r.report.targets, bench.library.size());
  EXPECT_EQ(r.report.decoys, bench.library.size());
  ASSERT_EQ(r.matches.size(), bench.queries.size());
  std::size_t hits = 0;
  for (std::size_t q = 0; q < r.matches.size(); ++q)
    if (!r.matches[q].empty() && r.reference_names[r.matches[q][0].reference_id] == bench.library[bench.truth[q]].id)
      ++hits;
  EXPECT_GE(hits, bench.queries.size() * 8 / 10);

  const auto j = nlohmann::json::parse(r.report.to_json(small_config()));
  EXPECT_TRUE(j["success"].get<bool>());
  EXPECT_TRUE(j["failed_stage"].is_null());
  std::vector<std::string> names;
  for (const auto& s : j["stages"]) names.push_back(s["name"]);
  EXPECT_EQ(names, (std::vector<std::string>{"config", "ingest", "preprocess", "decoys", "encode", "search", "fdr"}));
  EXPECT_EQ(j["accepted"].size(), r.report.accepted.size());
}

TEST(Pipeline, DeterministicAcrossRunsAndThreads) {
  const auto bench = small_bench(2);
  auto cfg = small_config();
  const auto a = run_pipeline(bench.queries, bench.library, cfg);
  cfg.threads = 3;
  const auto b = run_pipeline(bench.queries, bench.library, cfg);
  EXPECT_EQ(results_csv(a), results_csv(b));
  EXPECT_EQ(accepted_csv(a), accepted_csv(b));
  EXPECT_EQ(a.report.to_json(cfg).size() > 0, true);
}

TEST(Pipeline, NoiselessSimulationEqualsBypass) {
  const auto bench = small_bench(3, 150, 20);
  auto cfg = small_config();
  const auto bypass = run_pipeline(bench.queries, bench.library, cfg);
  cfg.emulation = EmulationMode::Simulate;
  cfg.noise = NoiseModel::noiseless();
  cfg.rram.adc_bits = 0;
  for (unsigned bits = 1; bits <= 3; ++bits) {
    cfg.rram.bits_per_cell = bits;
    const auto sim = run_pipeline(bench.queries, bench.library, cfg);
    ASSERT_TRUE(sim.report.success) << sim.report.error;
    EXPECT_EQ(results_csv(sim), results_csv(bypass)) << "bits " << bits;
    EXPECT_GT(sim.report.emulated_cycles, 0U);
  }
}

TEST(Pipeline, EmulatedBindingMatchesDigitalWithoutNoise) {
  const auto bench = small_bench(6, 20, 1);
  EncoderConfig ecfg;
  ecfg.dim = 1024;
  const Encoder enc(ecfg, BinConfig{});
  RramConfig rram;
  rram.adc_bits = 0;
  for (const auto& s : bench.library) {
    const auto v = bin(preprocess(s, PreprocessConfig{}), BinConfig{});
    std::size_t cycles = 0;
    EXPECT_EQ(emulate_encode(v, enc, rram, NoiseModel::noiseless(), &cycles), enc.encode(v));
    EXPECT_EQ(cycles % 1024, 0U);
  }
}

TEST(Pipeline, NoisyStorageFlipsSomeBits) {
  std::mt19937_64 rng(1);
  const auto h = test::random_hv(8192, rng);
  RramConfig rram;
  rram.time_bucket = TimeBucket::Day1;
  EXPECT_EQ(emulate_storage(h, rram, NoiseModel::noiseless(), 3), h);
  const auto noisy = emulate_storage(h, rram, NoiseModel::constant(0.2), 3);
  EXPECT_GT(hamming_distance(noisy, h), 0U);
  EXPECT_LT(hamming_distance(noisy, h), 8192U / 2);
  EXPECT_EQ(emulate_storage(h, rram, NoiseModel::constant(0.2), 3), noisy);
}

TEST(Pipeline, EmptyQueryFileFailsAtIngest) {
  test::TempDir dir;
  const auto bench = small_bench();
  write_mgf(dir / "refs.mgf", bench.library);
  test::write_text(dir / "empty.mgf", "");
  const auto r = run_pipeline(dir / "empty.mgf", dir / "refs.mgf", small_config());
  EXPECT_FALSE(r.report.success);
  EXPECT_EQ(r.report.failed_stage, "ingest");
  EXPECT_FALSE(r.report.error.empty());

  const auto missing = run_pipeline(dir / "nope.mgf", dir / "refs.mgf", small_config());
  EXPECT_FALSE(missing.report.success);
  EXPECT_EQ(missing.report.failed_stage, "ingest");
}

TEST(Pipeline, InvalidConfigFailsAtConfigStage) {
  const auto bench = small_bench();
  auto cfg = small_config();
  cfg.fdr_threshold = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  const auto r = run_pipeline(bench.queries, bench.library, cfg);
  EXPECT_FALSE(r.report.success);
  EXPECT_EQ(r.report.failed_stage, "config");
}

TEST(Pipeline, StoreInputsMatchMgfInputs) {
  test::TempDir dir;
  const auto bench = small_bench(7);
  write_mgf(dir / "refs.mgf", bench.library);
  write_mgf(dir / "queries.mgf", bench.queries);
  auto cfg = small_config();
  cfg.batch_size = 64;  // several streaming batches

  const std::vector<std::filesystem::path> ref_in = {dir / "refs.mgf"};
  const auto summary = encode_to_store(ref_in, dir / "refs.hdv", cfg);
  EXPECT_EQ(summary.written, 2 * bench.library.size());
  EXPECT_EQ(summary.decoys, bench.library.size());

  auto query_cfg = cfg;
  query_cfg.decoys = false;
  const std::vector<std::filesystem::path> query_in = {dir / "queries.mgf"};
  encode_to_store(query_in, dir / "queries.hdv", query_cfg);

  const auto from_mgf = run_pipeline(dir / "queries.mgf", dir / "refs.mgf", cfg);
  const auto from_store = run_pipeline(dir / "queries.hdv", dir / "refs.hdv", cfg);
  const auto mixed = run_pipeline(dir / "queries.mgf", dir / "refs.hdv", cfg);
  ASSERT_TRUE(from_mgf.report.success) << from_mgf.report.error;
  ASSERT_TRUE(from_store.report.success) << from_store.report.error;
  ASSERT_TRUE(mixed.report.success) << mixed.report.error;
  EXPECT_EQ(results_csv(from_store), results_csv(from_mgf));
  EXPECT_EQ(results_csv(mixed), results_csv(from_mgf));
}

TEST(Pipeline, EncodingMetadataRoundTrip) {
  auto cfg = small_config();
  cfg.encoder.id_precision_bits = 2;
  cfg.encoder.chunked = true;
  cfg.bins.bin_width = 0.1;
  PipelineConfig other;
  apply_encoding_metadata(encoding_metadata(cfg), other);
  EXPECT_EQ(other.encoder.dim, 1024U);
  EXPECT_EQ(other.encoder.id_precision_bits, 2U);
  EXPECT_TRUE(other.encoder.chunked);
  EXPECT_EQ(other.bins.bin_width, 0.1);
  EXPECT_THROW(apply_encoding_metadata("dim = x\n", other), ConfigError);
}

TEST(Pipeline, EncodeRejectsEmptyInput) {
  test::TempDir dir;
  test::write_text(dir / "bad.mgf", "BEGIN IONS\nTITLE=x\nEND IONS\n");
  const std::vector<std::filesystem::path> in = {dir / "bad.mgf"};
  EXPECT_THROW(encode_to_store(in, dir / "out.hdv", small_config()), Error);
}

// ---------------------------------------------------------------------------

namespace {

EncodedBench tiny_encoded(std::uint64_t seed, unsigned bits = 3, std::size_t dim = 1024) {
  EncoderConfig ecfg;
  ecfg.dim = dim;
  ecfg.id_precision_bits = bits;
  BenchEvalConfig eval;
  eval.threads = 1;
  return encode_bench(small_bench(seed, 200, 40), ecfg, eval);
}

}  // namespace

TEST(Experiments, ZeroBerEqualsCleanBaseline) {
  const auto bench = tiny_encoded(1);
  BenchEvalConfig eval;
  eval.threads = 1;
  const auto clean = evaluate_retrieval(bench, bench.index, eval);
  const std::vector<double> bers = {0.0, 0.2};
  const auto curve = retrieval_vs_ber(bench, bers, 9, eval);
  EXPECT_EQ(curve[0].retrieval_rate, clean.retrieval_rate);
  EXPECT_EQ(curve[0].accepted_count, clean.accepted_count);
  EXPECT_GT(clean.retrieval_rate, 0.5);
}

TEST(Experiments, BitFlipsNestedAcrossBer) {
  const auto bench = tiny_encoded(2);
  auto low = bench.index;
  auto high = bench.index;
  inject_bit_errors(low, 0.05, 4);
  inject_bit_errors(high, 0.2, 4);
  std::size_t flipped_low = 0, flipped_high = 0, total = 0;
  for (std::size_t i = 0; i < bench.index.words().size(); ++i) {
    const auto c = bench.index.words()[i];
    const auto l = low.words()[i] ^ c;
    const auto h = high.words()[i] ^ c;
    EXPECT_EQ(l & ~h, 0U);
    flipped_low += static_cast<std::size_t>(std::popcount(l));
    flipped_high += static_cast<std::size_t>(std::popcount(h));
    total += 64;
  }
  EXPECT_NEAR(static_cast<double>(flipped_low) / total, 0.05, 0.01);
  EXPECT_NEAR(static_cast<double>(flipped_high) / total, 0.2, 0.01);
  auto zero = bench.index;
  inject_bit_errors(zero, 0.0, 4);
  EXPECT_TRUE(std::equal(zero.words().begin(), zero.words().end(), bench.index.words().begin()));
  EXPECT_THROW(inject_bit_errors(zero, 1.5, 4), DomainError);
}

TEST(Experiments, SweepSpecParsing) {
  const auto spec = SweepSpec::from_config(KvConfig::parse(
      "sweep = robustness\ndims = 512, 1024\nbers = 0, 0.1\nid_bits = 1, 3\nrepetitions = 4\nbase_seed = 10\n"
      "bench.library_size = 50\nbench.query_count = 10\n"));
  EXPECT_EQ(spec.kind, SweepKind::Robustness);
  EXPECT_EQ(spec.dims, (std::vector<std::size_t>{512, 1024}));
  EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{10, 11, 12, 13}));
  EXPECT_EQ(spec.bench.library_size, 50U);
  EXPECT_NO_THROW(spec.validate());

  EXPECT_THROW(SweepSpec::from_config(KvConfig::parse("sweep = robustness\ndimz = 512\n")), ConfigError);
  EXPECT_THROW(SweepSpec::from_config(KvConfig::parse("sweep = nope\n")), ConfigError);
  EXPECT_THROW(SweepSpec::from_config(KvConfig::parse("dims = 512\n")), ConfigError);
  EXPECT_THROW(SweepSpec::from_config(KvConfig::parse("sweep = rram\nseeds = 1,2,3\nrepetitions = 3\n")), ConfigError);
  EXPECT_THROW(SweepSpec::from_config(KvConfig::parse("sweep = rram\nseeds = 1, 2\n")), ConfigError);
  EXPECT_THROW(SweepSpec::from_config(KvConfig::parse("sweep = dimension\ndims = \n")).validate(), ConfigError);
  EXPECT_THROW(SweepSpec::from_config(KvConfig::parse("sweep = robustness\nbers = 0, 1.5\n")).validate(), ConfigError);
}

TEST(Experiments, SingleSeedSingleDimGivesOneRow) {
  SweepSpec spec;
  spec.kind = SweepKind::Dimension;
  spec.dims = {512};
  spec.bers = {0.0};
  spec.seeds = {1};
  spec.bench.library_size = 60;
  spec.bench.query_count = 10;
  spec.eval.threads = 1;
  const auto rows = sweep_dimension(spec);
  ASSERT_EQ(rows.size(), 1U);
  EXPECT_EQ(rows[0].dim, 512U);
  std::ostringstream out;
  write_dimension_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "D,seed,retrieval_rate");
}

TEST(Experiments, SweepCsvIsReproducible) {
  SweepSpec spec;
  spec.kind = SweepKind::Robustness;
  spec.dims = {512};
  spec.bers = {0.0, 0.1};
  spec.id_bits = {1, 3};
  spec.seeds = {1, 2, 3};
  spec.bench.library_size = 80;
  spec.bench.query_count = 15;
  std::ostringstream a, b;
  spec.eval.threads = 1;
  run_sweep(spec, a);
  spec.eval.threads = 4;
  run_sweep(spec, b);
  const std::string csv = a.str();
  EXPECT_EQ(csv, b.str());
  // header + 2 bers * 2 precisions * 3 seeds
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "D,id_bits,ber,seed,retrieval_rate,accepted_count");
}

TEST(Experiments, RramSweepGridAndSchema) {
  SweepSpec spec;
  spec.kind = SweepKind::Rram;
  spec.cell_bits = {1, 3};
  spec.rows = {4, 64};
  spec.time_buckets = {TimeBucket::T0, TimeBucket::Day1};
  spec.seeds = {1, 2, 3};
  spec.ber_options.vectors = 10;
  spec.nmse_options.trials = 10;
  const auto rows = sweep_rram(spec);
  EXPECT_EQ(rows.size(), 2U * 2U * 2U * 3U);
  std::ostringstream out;
  write_rram_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "n,time_bucket,rows,ber,nmse,seed");
  std::ostringstream again;
  write_rram_csv(again, sweep_rram(spec));
  EXPECT_EQ(out.str(), again.str());
}
