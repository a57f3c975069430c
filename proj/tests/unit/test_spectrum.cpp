#include "hdoms/error.hpp"
#include "hdoms/mgf.hpp"
#include "hdoms/spectrum.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>

using namespace hdoms;

namespace {

PreprocessConfig raw_config(std::size_t min_peaks = 1, std::size_t max_peaks = 150) {
  PreprocessConfig cfg;
  cfg.min_peaks = min_peaks;
  cfg.max_peaks = max_peaks;
  cfg.transform = IntensityTransform::Raw;
  cfg.l2_normalize = false;
  return cfg;
}

Spectrum make(std::vector<Peak> peaks) {
  Spectrum s;
  s.id = "x";
  s.precursor_mass = 1000.0;
  s.peaks = std::move(peaks);
  return s;
}

}  // namespace

TEST(Preprocess, ThresholdDropsPeaksBelowOnePercent) {
  const auto out = preprocess(make({{100.0, 1000.0}, {101.0, 5.0}}), raw_config());
  ASSERT_EQ(out.peaks.size(), 1U);
  EXPECT_EQ(out.peaks[0], (Peak{100.0, 1000.0}));
}

TEST(Preprocess, ThresholdLeavesTooFewPeaksRejects) {
  EXPECT_THROW(preprocess(make({{100.0, 1000.0}, {101.0, 5.0}}), raw_config(2)), EmptySpectrum);
  EXPECT_FALSE(try_preprocess(make({{100.0, 1000.0}, {101.0, 5.0}}), raw_config(2)).has_value());
}

TEST(Preprocess, PeakExactlyAtThresholdSurvives) {
  const auto out = preprocess(make({{100.0, 1000.0}, {101.0, 10.0}}), raw_config());
  EXPECT_EQ(out.peaks.size(), 2U);
}

TEST(Preprocess, NoPositivePeakRejects) {
  EXPECT_THROW(preprocess(make({}), raw_config()), EmptySpectrum);
  EXPECT_THROW(preprocess(make({{100.0, 0.0}, {200.0, 0.0}}), raw_config()), EmptySpectrum);
}

TEST(Preprocess, EqualIntensitiesOnlyReordered) {
  std::vector<Peak> peaks = {{300.0, 7.0}, {100.0, 7.0}, {200.0, 7.0}};
  const auto out = preprocess(make(peaks), raw_config());
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
  EXPECT_EQ(out.peaks, peaks);
}

TEST(Preprocess, KeepsMostIntensePeaksAgainstSortOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = test::random_spectrum(rng, 200);
    // Force intensity ties so the lower-m/z rule matters.
    for (std::size_t i = 0; i < s.peaks.size(); i += 7) s.peaks[i].intensity = 500.0;
    auto cfg = raw_config(1, 150);
    cfg.threshold_fraction = 0.0;
    const auto out = preprocess(s, cfg);

    auto oracle = s.peaks;
    std::sort(oracle.begin(), oracle.end(), [](const Peak& a, const Peak& b) {
      return a.intensity != b.intensity ? a.intensity > b.intensity : a.mz < b.mz;
    });
    oracle.resize(150);
    std::sort(oracle.begin(), oracle.end(), [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
    EXPECT_EQ(out.peaks, oracle);
  }
}

TEST(Preprocess, SqrtThenUnitNorm) {
  PreprocessConfig cfg;
  cfg.min_peaks = 1;
  const auto out = preprocess(make({{100.0, 16.0}, {200.0, 9.0}}), cfg);
  ASSERT_EQ(out.peaks.size(), 2U);
  EXPECT_NEAR(out.peaks[0].intensity, 0.8, 1e-15);
  EXPECT_NEAR(out.peaks[1].intensity, 0.6, 1e-15);
  EXPECT_EQ(out.scale, IntensityScale::Sqrt);
}

TEST(Preprocess, MergesDuplicateMz) {
  const auto out = preprocess(make({{100.0, 3.0}, {100.0, 4.0}, {150.0, 7.0}}), raw_config());
  ASSERT_EQ(out.peaks.size(), 2U);
  EXPECT_EQ(out.peaks[0], (Peak{100.0, 7.0}));
}

TEST(Preprocess, PropertyIdempotentSortedAndBounded) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> count(1, 260);
  PreprocessConfig cfg;  // defaults: sqrt + L2
  for (int trial = 0; trial < 300; ++trial) {
    auto s = test::random_spectrum(rng, count(rng));
    const auto once = try_preprocess(s, cfg);
    if (!once) continue;
    const auto twice = preprocess(*once, cfg);
    EXPECT_EQ(twice, *once);
    EXPECT_GE(once->peaks.size(), cfg.min_peaks);
    EXPECT_LE(once->peaks.size(), cfg.max_peaks);
    for (std::size_t i = 1; i < once->peaks.size(); ++i) EXPECT_LT(once->peaks[i - 1].mz, once->peaks[i].mz);
    double norm = 0.0;
    for (const auto& p : once->peaks) norm += p.intensity * p.intensity;
    EXPECT_NEAR(norm, 1.0, 1e-12);
  }
}

TEST(Preprocess, RawModeIdempotent) {
  std::mt19937_64 rng(6);
  const auto cfg = raw_config(5, 50);
  for (int trial = 0; trial < 100; ++trial) {
    const auto once = preprocess(test::random_spectrum(rng, 120), cfg);
    EXPECT_EQ(preprocess(once, cfg), once);
  }
}

TEST(Preprocess, InvalidConfig) {
  PreprocessConfig cfg;
  cfg.threshold_fraction = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = PreprocessConfig{};
  cfg.min_peaks = 200;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

// ---------------------------------------------------------------------------

TEST(Bin, DefaultBinCount) {
  EXPECT_EQ(BinConfig{}.num_bins(), 48990U);
}

TEST(Bin, CollidingPeaksSummed) {
  BinConfig cfg;
  cfg.min_mz = 100.0;
  const auto v = bin(make({{100.02, 1.0}, {100.03, 2.0}}), cfg);
  ASSERT_EQ(v.bins.size(), 1U);
  EXPECT_EQ(v.bins[0].first, 0U);
  EXPECT_DOUBLE_EQ(v.bins[0].second, 3.0);
}

TEST(Bin, PeakAtMinMzLandsInBinZero) {
  BinConfig cfg;
  const auto v = bin(make({{cfg.min_mz, 2.5}}), cfg);
  ASSERT_EQ(v.bins.size(), 1U);
  EXPECT_EQ(v.bins[0].first, 0U);
  EXPECT_EQ(v.bins[0].second, 2.5);
}

TEST(Bin, OutOfRangeCountedNotFatal) {
  BinConfig cfg;
  const auto v = bin(make({{10.0, 1.0}, {cfg.max_mz, 1.0}, {3000.0, 1.0}, {500.0, 4.0}}), cfg);
  EXPECT_EQ(v.dropped, 3U);
  ASSERT_EQ(v.bins.size(), 1U);
  EXPECT_DOUBLE_EQ(v.total_intensity(), 4.0);
}

TEST(Bin, MatchesNaiveAccumulationOracle) {
  std::mt19937_64 rng(8);
  BinConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    auto s = test::random_spectrum(rng, 100, 40.0, 2600.0);
    // Integer intensities make the sums exact.
    for (auto& p : s.peaks) p.intensity = std::round(p.intensity);
    std::map<std::uint32_t, double> oracle;
    double in_range = 0.0;
    for (const auto& p : s.peaks) {
      if (p.mz < cfg.min_mz || p.mz >= cfg.max_mz) continue;
      oracle[static_cast<std::uint32_t>(std::floor((p.mz - cfg.min_mz) / cfg.bin_width))] += p.intensity;
      in_range += p.intensity;
    }
    const auto v = bin(s, cfg);
    ASSERT_EQ(v.bins.size(), oracle.size());
    std::size_t i = 0;
    for (const auto& [idx, sum] : oracle) {
      EXPECT_EQ(v.bins[i].first, idx);
      EXPECT_EQ(v.bins[i].second, sum);
      EXPECT_LT(idx, cfg.num_bins());
      ++i;
    }
    EXPECT_EQ(v.total_intensity(), in_range);
  }
}

TEST(Bin, RealIntensitiesConserveMass) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = test::random_spectrum(rng, 150);
    const double total = std::accumulate(s.peaks.begin(), s.peaks.end(), 0.0,
                                         [](double acc, const Peak& p) { return acc + p.intensity; });
    const auto v = bin(s, BinConfig{});
    EXPECT_NEAR(v.total_intensity(), total, 1e-12 * total);
    for (const auto& [idx, value] : v.bins) EXPECT_GT(value, 0.0);
  }
}

TEST(Bin, InvalidConfig) {
  BinConfig cfg;
  cfg.bin_width = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = BinConfig{};
  cfg.max_mz = cfg.min_mz;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

// ---------------------------------------------------------------------------

TEST(Mgf, OneWellFormedBlock) {
  test::TempDir dir;
  test::write_text(dir / "a.mgf",
                   "BEGIN IONS\nTITLE=pep1\nPEPMASS=500.5 1234\nCHARGE=2+\n100.1 10\n200.2 20\n300.3 30\nEND IONS\n");
  IngestReport report;
  const auto spectra = load_mgf(dir / "a.mgf", &report);
  ASSERT_EQ(spectra.size(), 1U);
  EXPECT_EQ(spectra[0].id, "pep1");
  EXPECT_EQ(spectra[0].peaks.size(), 3U);
  EXPECT_EQ(spectra[0].precursor_charge, 2);
  EXPECT_NEAR(spectra[0].precursor_mass, (500.5 - kProtonMass) * 2, 1e-9);
  EXPECT_EQ(report.parsed, 1U);
  EXPECT_EQ(report.skipped, 0U);
}

TEST(Mgf, EmptyFileIsFormatError) {
  test::TempDir dir;
  test::write_text(dir / "empty.mgf", "");
  EXPECT_THROW(load_mgf(dir / "empty.mgf"), FormatError);
}

TEST(Mgf, MissingFileIsIoError) {
  EXPECT_THROW(load_mgf("/nonexistent/file.mgf"), IoError);
}

TEST(Mgf, BlockWithoutPepmassSkipped) {
  test::TempDir dir;
  test::write_text(dir / "b.mgf",
                   "BEGIN IONS\nTITLE=bad\nCHARGE=2\n100 1\nEND IONS\n"
                   "BEGIN IONS\nTITLE=good\nPEPMASS=400\n100 1\nEND IONS\n");
  IngestReport report;
  const auto spectra = load_mgf(dir / "b.mgf", &report);
  ASSERT_EQ(spectra.size(), 1U);
  EXPECT_EQ(spectra[0].id, "good");
  EXPECT_EQ(report.skipped, 1U);
}

TEST(Mgf, DefaultsForMissingChargeAndTitle) {
  test::TempDir dir;
  test::write_text(dir / "c.mgf", "BEGIN IONS\nPEPMASS=400\n100 1\nEND IONS\nBEGIN IONS\nPEPMASS=401\nEND IONS\n");
  const auto spectra = load_mgf(dir / "c.mgf");
  ASSERT_EQ(spectra.size(), 2U);
  EXPECT_EQ(spectra[0].precursor_charge, 1);
  EXPECT_EQ(spectra[0].id, "spectrum_1");
  EXPECT_EQ(spectra[1].id, "spectrum_2");
}

TEST(Mgf, MalformedPeakLineAndUnterminatedBlockSkipped) {
  test::TempDir dir;
  test::write_text(dir / "d.mgf",
                   "BEGIN IONS\nPEPMASS=400\n100 abc\nEND IONS\n"
                   "BEGIN IONS\nPEPMASS=400\n100 1\nEND IONS\n"
                   "BEGIN IONS\nPEPMASS=400\n100 1\n");
  MgfReader reader(dir / "d.mgf");
  std::size_t n = 0;
  while (reader.next()) ++n;
  EXPECT_EQ(n, 1U);
  EXPECT_EQ(reader.parsed(), 1U);
  EXPECT_EQ(reader.skipped(), 2U);
}

TEST(Mgf, OnlyMalformedBlocksIsFormatError) {
  test::TempDir dir;
  test::write_text(dir / "e.mgf", "BEGIN IONS\nTITLE=x\nEND IONS\n");
  EXPECT_THROW(load_mgf(dir / "e.mgf"), FormatError);
}

TEST(Mgf, WriteReadRoundTrip) {
  std::mt19937_64 rng(3);
  std::vector<Spectrum> spectra;
  for (int i = 0; i < 20; ++i) {
    auto s = test::random_spectrum(rng, 30);
    s.id = "spec_" + std::to_string(i);
    s.precursor_charge = 1 + i % 3;
    s.is_decoy = i % 4 == 0;
    spectra.push_back(s);
  }
  test::TempDir dir;
  write_mgf(dir / "rt.mgf", spectra);
  const auto back = load_mgf(dir / "rt.mgf");
  ASSERT_EQ(back.size(), spectra.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, spectra[i].id);
    EXPECT_EQ(back[i].peaks, spectra[i].peaks);
    EXPECT_EQ(back[i].precursor_charge, spectra[i].precursor_charge);
    EXPECT_EQ(back[i].is_decoy, spectra[i].is_decoy);
    EXPECT_NEAR(back[i].precursor_mass, spectra[i].precursor_mass, 1e-9);
  }
}

TEST(Mgf, IngestCsv) {
  std::ostringstream out;
  write_ingest_csv(out, {{"a.mgf", 3, 1, 2}});
  EXPECT_EQ(out.str(), "path,parsed,skipped,rejected\na.mgf,3,1,2\n");
}
