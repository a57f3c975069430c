#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hdoms {

/// Flat `key = value` text configuration. Lines starting with '#' and blank
/// lines are ignored; duplicate keys are an error. Used for sweep specs, noise
/// tables and CLI config files.
class KvConfig {
public:
  KvConfig() = default;

  static KvConfig parse(std::string_view text, std::string_view source = "<string>");
  static KvConfig load(const std::filesystem::path& path);

  [[nodiscard]] bool contains(const std::string& key) const { return values_.count(key) != 0; }
  [[nodiscard]] const std::map<std::string, std::string>& values() const noexcept { return values_; }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  void erase(const std::string& key) { values_.erase(key); }

  /// Throws ConfigError naming every key not in `allowed`.
  void reject_unknown(const std::set<std::string>& allowed) const;

  [[nodiscard]] std::optional<std::string> get_string(const std::string& key) const;
  [[nodiscard]] std::optional<double> get_double(const std::string& key) const;
  [[nodiscard]] std::optional<long long> get_int(const std::string& key) const;
  [[nodiscard]] std::optional<bool> get_bool(const std::string& key) const;
  [[nodiscard]] std::optional<std::vector<double>> get_double_list(const std::string& key) const;
  [[nodiscard]] std::optional<std::vector<long long>> get_int_list(const std::string& key) const;
  [[nodiscard]] std::optional<std::vector<std::string>> get_string_list(const std::string& key) const;

private:
  std::map<std::string, std::string> values_;
  std::string source_ = "<string>";
};

/// Parses a real number, accepting "inf"/"infinity". Throws ConfigError.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);
std::vector<std::string> split_list(std::string_view text);

}  // namespace hdoms
