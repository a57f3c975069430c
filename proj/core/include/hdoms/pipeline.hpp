#pragma once

#include "hdoms/encoder.hpp"
#include "hdoms/fdr.hpp"
#include "hdoms/mgf.hpp"
#include "hdoms/noise_model.hpp"
#include "hdoms/search.hpp"
#include "hdoms/spectrum.hpp"
#include "hdoms/xbar.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hdoms {

enum class EmulationMode : std::uint8_t {
  Bypass,   // exact digital encode and storage
  Simulate  // in-memory binding on a noisy crossbar, noisy n-bit reference storage
};

struct PipelineConfig {
  PreprocessConfig preprocess;
  BinConfig bins;
  EncoderConfig encoder;
  double window = kOpenWindow;
  std::size_t k = 1;
  double fdr_threshold = 0.01;
  FdrFormula fdr_formula = FdrFormula::DecoysOverTargets;
  bool decoys = true;
  std::uint64_t decoy_seed = 1;
  EmulationMode emulation = EmulationMode::Bypass;
  RramConfig rram;
  NoiseModel noise = NoiseModel::default_model();
  unsigned threads = 0;
  std::size_t batch_size = 4096;  // reference spectra per streaming batch

  /// Throws ConfigError (0 < fdr_threshold < 1, k >= 1, window >= 0, module configs).
  void validate() const;
};

/// `key = value` lines describing everything that determines an encoding.
/// Stored in HDV1 metadata so a later search can re-encode compatible queries.
std::string encoding_metadata(const PipelineConfig& cfg);
/// Overwrites the encoding fields of cfg from metadata text. Throws ConfigError.
void apply_encoding_metadata(const std::string& metadata, PipelineConfig& cfg);

struct StageReport {
  std::string name;
  std::size_t input = 0;
  std::size_t output = 0;
  double seconds = 0.0;
};

struct AcceptedId {
  std::string query;
  std::string reference;
  std::int32_t similarity = 0;
};

struct RunReport {
  bool success = false;
  std::string failed_stage;
  std::string error;
  std::vector<IngestReport> inputs;
  std::vector<StageReport> stages;  // in execution order
  std::size_t queries = 0;
  std::size_t targets = 0;
  std::size_t decoys = 0;
  std::size_t emulated_cycles = 0;  // crossbar cycles spent on in-memory binding
  FdrResult fdr;
  std::vector<AcceptedId> accepted;

  /// Adds `seconds` and counts to the stage, creating it at the end if new.
  StageReport& stage(const std::string& name);
  /// JSON document (schema in docs/run_report.md).
  [[nodiscard]] std::string to_json(const PipelineConfig& cfg) const;
};

/// Encoded references sorted by mass, with names by reference id.
struct EncodedLibrary {
  ReferenceIndex index;
  std::vector<std::string> names;
  std::vector<int> charges;
  std::size_t targets = 0;
  std::size_t decoys = 0;
};

struct EncodedQueries {
  std::vector<Hypervector> vectors;
  std::vector<double> masses;
  std::vector<std::string> names;
};

struct PipelineResult {
  RunReport report;
  EncodedQueries queries;
  std::vector<std::string> reference_names;
  std::vector<std::vector<ScoredMatch>> matches;  // per query, top-k

  void write_results_csv(std::ostream& out) const;
  /// Accepted identifications: query_id,reference_id,similarity.
  void write_accepted_csv(std::ostream& out) const;
};

/// In-memory binding of one spectrum on the crossbar: ID rows programmed as
/// differential pairs (noise keyed by bin, so every spectrum sees the same
/// relaxed array), level vectors as inputs, decoded MACs rounded and signed.
/// cycles (optional) receives the number of sensing cycles.
Hypervector emulate_encode(const BinnedVector& v, const Encoder& encoder, const RramConfig& rram,
                           const NoiseModel& noise, std::size_t* cycles = nullptr);

/// Writes h into non-differential n-bit cells (zero-padding the last segment),
/// applies relaxation noise for rram.time_bucket and reads it back.
Hypervector emulate_storage(const Hypervector& h, const RramConfig& rram, const NoiseModel& noise,
                            std::uint64_t key);

/// Full run from files: each side is an MGF file or an HDV1 store (detected
/// by magic). MGF references are decoy-augmented when cfg.decoys is set.
/// Never throws for stage failures: report.success is false and
/// report.failed_stage names the stage; partial counts are kept.
PipelineResult run_pipeline(const std::filesystem::path& query_path, const std::filesystem::path& ref_path,
                            PipelineConfig cfg);

/// Same pipeline over spectra already in memory; ingest just copies them.
PipelineResult run_pipeline(std::span<const Spectrum> queries, std::span<const Spectrum> references,
                            const PipelineConfig& cfg);

struct EncodeSummary {
  std::vector<IngestReport> inputs;
  std::size_t written = 0;
  std::size_t decoys = 0;
};

/// Preprocesses and encodes MGF files into an HDV1 store, streaming.
/// With cfg.decoys set, one decoy per target is appended after all targets.
/// Emulation, when enabled, applies to the binding step only.
EncodeSummary encode_to_store(std::span<const std::filesystem::path> inputs, const std::filesystem::path& out,
                              const PipelineConfig& cfg);

}  // namespace hdoms
