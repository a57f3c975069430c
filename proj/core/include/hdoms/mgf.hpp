#pragma once

#include "hdoms/spectrum.hpp"

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hdoms {

/// Per-file ingestion counters, written as one CSV line per input file.
struct IngestReport {
  std::string path;
  std::size_t parsed = 0;
  std::size_t skipped = 0;   // malformed blocks
  std::size_t rejected = 0;  // parsed but dropped by preprocessing
};

/// Streaming reader for MGF-like text: BEGIN IONS / END IONS blocks carrying
/// PEPMASS, CHARGE and TITLE headers followed by "mz intensity" lines.
///
/// Malformed blocks (missing PEPMASS, unparsable peak lines, invalid values,
/// unterminated blocks) are skipped and counted. Once the file is exhausted
/// without a single valid block, next() throws FormatError.
class MgfReader {
public:
  explicit MgfReader(const std::filesystem::path& path);

  /// Next spectrum, or nullopt at end of file.
  std::optional<Spectrum> next();

  [[nodiscard]] std::size_t parsed() const noexcept { return parsed_; }
  [[nodiscard]] std::size_t skipped() const noexcept { return skipped_; }
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t parsed_ = 0;
  std::size_t skipped_ = 0;
  std::size_t line_no_ = 0;
  bool finished_ = false;
};

/// Reads a whole file. Throws IoError / FormatError like MgfReader.
std::vector<Spectrum> load_mgf(const std::filesystem::path& path, IngestReport* report = nullptr);

/// Writes spectra as MGF. PEPMASS is written as precursor m/z for the charge.
void write_mgf(std::ostream& out, const std::vector<Spectrum>& spectra);
void write_mgf(const std::filesystem::path& path, const std::vector<Spectrum>& spectra);

void write_ingest_csv(std::ostream& out, const std::vector<IngestReport>& reports);

/// Shortest round-trip decimal representation, stable across runs.
std::string format_double(double value);

}  // namespace hdoms
