#include "hdoms/noise_model.hpp"

#include "hdoms/default_noise_table.hpp"
#include "hdoms/error.hpp"
#include "hdoms/mgf.hpp"

#include <set>

namespace hdoms {

std::string_view to_string(TimeBucket bucket) noexcept {
  switch (bucket) {
    case TimeBucket::T0: return "t0";
    case TimeBucket::Min30: return "30min";
    case TimeBucket::Min60: return "60min";
    case TimeBucket::Day1: return "1day";
  }
  return "?";
}

TimeBucket parse_time_bucket(std::string_view text) {
  for (const auto b : kAllTimeBuckets)
    if (to_string(b) == text) return b;
  throw ConfigError("unknown time bucket '" + std::string(text) + "' (expected t0, 30min, 60min, 1day)");
}

NoiseModel NoiseModel::default_model() {
  return from_config(KvConfig::parse(detail::kDefaultNoiseTable, "noise_sigma.cfg"));
}

NoiseModel NoiseModel::noiseless() { return constant(0.0); }

NoiseModel NoiseModel::constant(double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  NoiseModel m;
  m.uniform_ = true;
  m.uniform_sigma_ = sigma;
  return m;
}

NoiseModel NoiseModel::from_config(const KvConfig& cfg) {
  NoiseModel m;
  for (const auto& [key, value] : cfg.values()) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ConfigError("noise table key must be '<levels>.<bucket>': " + key);
    const auto levels = parse_int(key.substr(0, dot), key);
    if (levels != 2 && levels != 4 && levels != 8)
      throw ConfigError("noise table levels must be 2, 4 or 8: " + key);
    const auto bucket = parse_time_bucket(key.substr(dot + 1));
    m.set_sigma(static_cast<unsigned>(levels), bucket, parse_double(value, key));
  }
  m.validate();
  return m;
}

NoiseModel NoiseModel::load(const std::filesystem::path& path) { return from_config(KvConfig::load(path)); }

double NoiseModel::sigma(unsigned levels_per_cell, TimeBucket bucket) const {
  if (uniform_) return uniform_sigma_;
  const auto it = table_.find({levels_per_cell, bucket});
  if (it == table_.end())
    throw ConfigError("noise table has no entry for " + std::to_string(levels_per_cell) + "." +
                      std::string(to_string(bucket)));
  return it->second;
}

void NoiseModel::set_sigma(unsigned levels_per_cell, TimeBucket bucket, double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  uniform_ = false;
  table_[{levels_per_cell, bucket}] = sigma;
}

void NoiseModel::validate() const {
  if (uniform_) return;
  std::set<unsigned> levels;
  for (const auto& [key, sigma] : table_) levels.insert(key.first);
  for (const unsigned l : levels) {
    double prev = -1.0;
    for (const auto b : kAllTimeBuckets) {
      const auto it = table_.find({l, b});
      if (it == table_.end()) continue;
      if (it->second < prev)
        throw ConfigError("noise sigma for " + std::to_string(l) + " levels decreases at " + std::string(to_string(b)));
      prev = it->second;
    }
  }
}

std::string NoiseModel::to_config_text() const {
  std::string out;
  for (const unsigned l : {2U, 4U, 8U})
    for (const auto b : kAllTimeBuckets) {
      if (!uniform_ && table_.find({l, b}) == table_.end()) continue;
      out += std::to_string(l) + "." + std::string(to_string(b)) + " = " + format_double(sigma(l, b)) + "\n";
    }
  return out;
}

}  // namespace hdoms
