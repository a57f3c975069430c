#include "hdoms/hv_store.hpp"

#include "hdoms/error.hpp"

#include <array>
#include <bit>
#include <algorithm>
#include <cstring>

namespace hdoms {

namespace {

constexpr std::array<char, 4> kMagic = {'H', 'D', 'V', '1'};
constexpr std::array<char, 4> kTrailerMagic = {'M', 'E', 'T', 'A'};
constexpr std::streamoff kCountOffset = 9;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw FormatError("HDV1: unexpected end of file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void put_f64(std::ostream& out, double v) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

std::size_t row_bytes(std::size_t dim, unsigned bits) { return dim * bits / 8; }

}  // namespace

std::vector<std::uint8_t> pack_row(const Hypervector& h) {
  std::vector<std::uint8_t> out(row_bytes(h.dim(), 1));
  const auto words = h.words();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>((words[i / 8] >> (8 * (i % 8))) & 0xFF);
  return out;
}

std::vector<std::uint8_t> pack_row(const MultiBitHypervector& h) {
  const unsigned bits = h.precision_bits;
  std::vector<std::uint8_t> out(row_bytes(h.dim(), bits), 0);
  for (std::size_t d = 0; d < h.dim(); ++d) {
    const int v = h.values[d];
    const unsigned magnitude = static_cast<unsigned>(v < 0 ? -v : v);
    const unsigned code = ((magnitude - 1U) << 1) | (v > 0 ? 1U : 0U);
    for (unsigned b = 0; b < bits; ++b) {
      const std::size_t bit = d * bits + b;
      if ((code >> b) & 1U) out[bit / 8] |= static_cast<std::uint8_t>(1U << (bit % 8));
    }
  }
  return out;
}

MultiBitHypervector unpack_multibit_row(std::span<const std::uint8_t> bytes, std::size_t dim, unsigned bits) {
  MultiBitHypervector h;
  h.precision_bits = bits;
  h.values.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    unsigned code = 0;
    for (unsigned b = 0; b < bits; ++b) {
      const std::size_t bit = d * bits + b;
      code |= ((bytes[bit / 8] >> (bit % 8)) & 1U) << b;
    }
    const int magnitude = static_cast<int>(code >> 1) + 1;
    h.values[d] = static_cast<std::int8_t>((code & 1U) ? magnitude : -magnitude);
  }
  return h;
}

HvStoreWriter::HvStoreWriter(const std::filesystem::path& path, std::size_t dim, unsigned precision_bits,
                             std::string metadata)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), dim_(dim), bits_(precision_bits),
      metadata_(std::move(metadata)) {
  if (!out_) throw IoError("cannot write hypervector store: " + path.string());
  if (dim % 64 != 0) throw DimensionMismatch("store dimension must be a multiple of 64");
  if (bits_ < 1 || bits_ > 3) throw ConfigError("store precision must be 1, 2 or 3 bits");
  out_.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(dim));
  put_le<std::uint8_t>(out_, static_cast<std::uint8_t>(bits_));
  put_le<std::uint64_t>(out_, 0);  // patched by finish()
}

HvStoreWriter::~HvStoreWriter() {
  if (!finished_) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void HvStoreWriter::write_row(const std::vector<std::uint8_t>& bytes) {
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void HvStoreWriter::add(const Hypervector& h, HvRecord record) {
  if (bits_ != 1) throw ConfigError("binary row added to a multi-bit store");
  if (h.dim() != dim_) throw DimensionMismatch("row dimension does not match store");
  write_row(pack_row(h));
  records_.push_back(std::move(record));
}

void HvStoreWriter::add(const MultiBitHypervector& h, HvRecord record) {
  if (h.precision_bits != bits_) throw ConfigError("row precision does not match store");
  if (h.dim() != dim_) throw DimensionMismatch("row dimension does not match store");
  write_row(pack_row(h));
  records_.push_back(std::move(record));
}

void HvStoreWriter::finish() {
  if (finished_) return;
  finished_ = true;
  out_.write(kTrailerMagic.data(), kTrailerMagic.size());
  put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(metadata_.size()));
  out_.write(metadata_.data(), static_cast<std::streamsize>(metadata_.size()));
  for (const auto& r : records_) {
    put_f64(out_, r.precursor_mass);
    put_le<std::uint8_t>(out_, static_cast<std::uint8_t>(std::clamp(r.precursor_charge, 0, 255)));
    put_le<std::uint8_t>(out_, r.is_decoy ? 1 : 0);
    put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(r.id.size()));
    out_.write(r.id.data(), static_cast<std::streamsize>(r.id.size()));
  }
  out_.seekp(kCountOffset);
  put_le<std::uint64_t>(out_, records_.size());
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_.string());
  out_.close();
}

void write_hv_store(const std::filesystem::path& path, const HvStore& store) {
  HvStoreWriter writer(path, store.dim, store.precision_bits, store.metadata);
  if (store.records.size() != store.count()) throw FormatError("store has mismatched record count");
  for (std::size_t i = 0; i < store.count(); ++i) {
    if (store.precision_bits == 1)
      writer.add(store.binary[i], store.records[i]);
    else
      writer.add(store.multibit[i], store.records[i]);
  }
  writer.finish();
}

bool is_hv_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  return in && magic == kMagic;
}

HvStore read_hv_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open hypervector store: " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError(path.string() + ": not an HDV1 file");

  HvStore store;
  store.dim = get_le<std::uint32_t>(in);
  store.precision_bits = get_le<std::uint8_t>(in);
  const auto count = get_le<std::uint64_t>(in);
  if (store.dim % 64 != 0 || store.precision_bits < 1 || store.precision_bits > 3)
    throw FormatError(path.string() + ": invalid HDV1 header");

  const std::size_t bytes = row_bytes(store.dim, store.precision_bits);
  std::vector<std::uint8_t> row(bytes);
  std::vector<std::uint64_t> words(store.dim / 64);
  for (std::uint64_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw FormatError(path.string() + ": truncated row data");
    if (store.precision_bits == 1) {
      std::fill(words.begin(), words.end(), 0);
      for (std::size_t b = 0; b < bytes; ++b) words[b / 8] |= static_cast<std::uint64_t>(row[b]) << (8 * (b % 8));
      store.binary.push_back(Hypervector::from_words(store.dim, words));
    } else {
      store.multibit.push_back(unpack_multibit_row(row, store.dim, store.precision_bits));
    }
  }

  std::array<char, 4> trailer{};
  in.read(trailer.data(), trailer.size());
  if (!in || trailer != kTrailerMagic) throw FormatError(path.string() + ": missing META trailer");
  const auto meta_len = get_le<std::uint32_t>(in);
  store.metadata.resize(meta_len);
  in.read(store.metadata.data(), meta_len);
  if (!in) throw FormatError(path.string() + ": truncated metadata");
  store.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    HvRecord r;
    r.precursor_mass = get_f64(in);
    r.precursor_charge = get_le<std::uint8_t>(in);
    r.is_decoy = get_le<std::uint8_t>(in) != 0;
    const auto id_len = get_le<std::uint32_t>(in);
    r.id.resize(id_len);
    in.read(r.id.data(), id_len);
    if (!in) throw FormatError(path.string() + ": truncated record");
    store.records.push_back(std::move(r));
  }
  return store;
}

}  // namespace hdoms
