#include "hdoms/mgf.hpp"

#include "hdoms/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <ostream>
#include <string_view>

namespace hdoms {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string_view first_token(std::string_view s) {
  s = trim(s);
  std::size_t end = 0;
  while (end < s.size() && !std::isspace(static_cast<unsigned char>(s[end]))) ++end;
  return s.substr(0, end);
}

// "2+", "3", "2+ and 3+" -> 2 / 3 / 2. Returns 0 on failure.
int parse_charge(std::string_view s) {
  s = trim(s);
  int value = 0;
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    value = value * 10 + (s[i] - '0');
    ++i;
  }
  return i == 0 ? 0 : value;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::toupper(static_cast<unsigned char>(a[i])) != std::toupper(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

MgfReader::MgfReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw IoError("cannot open MGF file: " + path.string());
}

std::optional<Spectrum> MgfReader::next() {
  if (finished_) return std::nullopt;

  std::string line;
  bool in_block = false;
  bool valid = true;
  bool has_pepmass = false;
  double pepmass = 0.0;
  Spectrum current;
  std::size_t block_ordinal = parsed_ + skipped_;

  auto reset_block = [&] {
    in_block = true;
    valid = true;
    has_pepmass = false;
    pepmass = 0.0;
    current = Spectrum{};
    ++block_ordinal;
  };

  while (std::getline(in_, line)) {
    ++line_no_;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#' || text.front() == ';' || text.front() == '!') continue;

    if (iequals(text, "BEGIN IONS")) {
      if (in_block) ++skipped_;  // previous block never terminated
      reset_block();
      continue;
    }
    if (!in_block) continue;

    if (iequals(text, "END IONS")) {
      in_block = false;
      if (!valid || !has_pepmass) {
        ++skipped_;
        continue;
      }
      if (current.precursor_charge <= 0) current.precursor_charge = 1;
      current.precursor_mass = (pepmass - kProtonMass) * current.precursor_charge;
      if (current.id.empty()) current.id = "spectrum_" + std::to_string(block_ordinal);
      ++parsed_;
      return current;
    }

    const auto eq = text.find('=');
    if (eq != std::string_view::npos && std::isalpha(static_cast<unsigned char>(text.front()))) {
      const auto key = trim(text.substr(0, eq));
      const auto value = trim(text.substr(eq + 1));
      if (iequals(key, "TITLE")) {
        current.id = std::string(value);
      } else if (iequals(key, "PEPMASS")) {
        has_pepmass = parse_number(first_token(value), pepmass) && pepmass > 0.0;
        if (!has_pepmass) valid = false;
      } else if (iequals(key, "CHARGE")) {
        current.precursor_charge = parse_charge(value);
        if (current.precursor_charge <= 0) valid = false;
      } else if (iequals(key, "DECOY")) {
        current.is_decoy = value == "1" || iequals(value, "true");
      }
      continue;
    }

    // Peak line: "mz intensity [extra columns ignored]".
    std::string_view rest = text;
    const auto mz_tok = first_token(rest);
    rest = trim(rest.substr(mz_tok.size()));
    const auto int_tok = first_token(rest);
    Peak p;
    if (!parse_number(mz_tok, p.mz) || !parse_number(int_tok, p.intensity) || !(p.mz > 0.0) ||
        !(p.intensity >= 0.0)) {
      valid = false;
      continue;
    }
    current.peaks.push_back(p);
  }

  if (in_block) ++skipped_;
  finished_ = true;
  if (parsed_ == 0)
    throw FormatError("no valid spectra in " + path_.string() + " (" + std::to_string(skipped_) +
                      " malformed block(s))");
  return std::nullopt;
}

std::vector<Spectrum> load_mgf(const std::filesystem::path& path, IngestReport* report) {
  MgfReader reader(path);
  std::vector<Spectrum> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  if (report) {
    report->path = path.string();
    report->parsed = reader.parsed();
    report->skipped = reader.skipped();
  }
  return out;
}

void write_mgf(std::ostream& out, const std::vector<Spectrum>& spectra) {
  for (const auto& s : spectra) {
    const int z = s.precursor_charge > 0 ? s.precursor_charge : 1;
    out << "BEGIN IONS\n";
    out << "TITLE=" << s.id << '\n';
    out << "PEPMASS=" << format_double(s.precursor_mass / z + kProtonMass) << '\n';
    out << "CHARGE=" << z << "+\n";
    if (s.is_decoy) out << "DECOY=1\n";
    for (const auto& p : s.peaks) out << format_double(p.mz) << ' ' << format_double(p.intensity) << '\n';
    out << "END IONS\n\n";
  }
}

void write_mgf(const std::filesystem::path& path, const std::vector<Spectrum>& spectra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write MGF file: " + path.string());
  write_mgf(out, spectra);
  if (!out) throw IoError("write failed: " + path.string());
}

void write_ingest_csv(std::ostream& out, const std::vector<IngestReport>& reports) {
  out << "path,parsed,skipped,rejected\n";
  for (const auto& r : reports)
    out << r.path << ',' << r.parsed << ',' << r.skipped << ',' << r.rejected << '\n';
}

}  // namespace hdoms
