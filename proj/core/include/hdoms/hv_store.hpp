#pragma once

#include "hdoms/hypervector.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hdoms {

/// Per-row metadata kept alongside stored hypervectors.
struct HvRecord {
  std::string id;
  double precursor_mass = 0.0;
  int precursor_charge = 1;
  bool is_decoy = false;

  friend bool operator==(const HvRecord&, const HvRecord&) = default;
};

/// In-memory image of an HDV1 file (layout in docs/hdv1_format.md).
/// precision_bits == 1 stores `binary`; 2 or 3 stores `multibit`.
struct HvStore {
  std::size_t dim = 0;
  unsigned precision_bits = 1;
  std::vector<Hypervector> binary;
  std::vector<MultiBitHypervector> multibit;
  std::vector<HvRecord> records;
  /// Free-form `key = value` lines, used to carry the encoder configuration.
  std::string metadata;

  [[nodiscard]] std::size_t count() const noexcept {
    return precision_bits == 1 ? binary.size() : multibit.size();
  }
};

/// Streams rows to disk; the record trailer and final count are written by finish().
class HvStoreWriter {
public:
  HvStoreWriter(const std::filesystem::path& path, std::size_t dim, unsigned precision_bits,
                std::string metadata);
  ~HvStoreWriter();
  HvStoreWriter(const HvStoreWriter&) = delete;
  HvStoreWriter& operator=(const HvStoreWriter&) = delete;

  void add(const Hypervector& h, HvRecord record);
  void add(const MultiBitHypervector& h, HvRecord record);
  void finish();

  [[nodiscard]] std::size_t count() const noexcept { return records_.size(); }

private:
  void write_row(const std::vector<std::uint8_t>& bytes);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t dim_;
  unsigned bits_;
  std::string metadata_;
  std::vector<HvRecord> records_;
  bool finished_ = false;
};

void write_hv_store(const std::filesystem::path& path, const HvStore& store);

/// Throws IoError when unreadable, FormatError on a bad magic or truncated file.
HvStore read_hv_store(const std::filesystem::path& path);

/// True if the file starts with the HDV1 magic.
bool is_hv_store(const std::filesystem::path& path);

/// Row encodings (exposed for tests). Row size is dim * precision / 8 bytes.
std::vector<std::uint8_t> pack_row(const Hypervector& h);
std::vector<std::uint8_t> pack_row(const MultiBitHypervector& h);
MultiBitHypervector unpack_multibit_row(std::span<const std::uint8_t> bytes, std::size_t dim, unsigned bits);

}  // namespace hdoms
