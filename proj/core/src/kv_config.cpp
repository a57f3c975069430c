#include "hdoms/kv_config.hpp"

#include "hdoms/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hdoms {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

double parse_double(std::string_view text, std::string_view what) {
  const std::string_view t = trim(text);
  const std::string l = lower(t);
  if (l == "inf" || l == "+inf" || l == "infinity") return std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || t.empty())
    throw ConfigError(std::string(what) + ": not a number: '" + std::string(t) + "'");
  return value;
}

long long parse_int(std::string_view text, std::string_view what) {
  const std::string_view t = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(std::string(what) + ": not an integer: '" + std::string(t) + "'");
  return value;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? text.size() : comma;
    const auto item = trim(text.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

KvConfig KvConfig::parse(std::string_view text, std::string_view source) {
  KvConfig cfg;
  cfg.source_ = std::string(source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    ++line_no;
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (!line.empty() && line.front() != '#') {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
      const std::string key(trim(line.substr(0, eq)));
      std::string_view value = trim(line.substr(eq + 1));
      if (const auto hash = value.find(" #"); hash != std::string_view::npos)
        value = trim(value.substr(0, hash));
      if (key.empty())
        throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": empty key");
      if (!cfg.values_.emplace(key, std::string(value)).second)
        throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    if (nl == std::string_view::npos) break;
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KvConfig::reject_unknown(const std::set<std::string>& allowed) const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (allowed.count(key) == 0) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) throw ConfigError(source_ + ": unknown key(s): " + unknown);
}

std::optional<std::string> KvConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> KvConfig::get_double(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  return parse_double(*s, key);
}

std::optional<long long> KvConfig::get_int(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  return parse_int(*s, key);
}

std::optional<bool> KvConfig::get_bool(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  const std::string l = lower(*s);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw ConfigError(key + ": not a boolean: '" + *s + "'");
}

std::optional<std::vector<double>> KvConfig::get_double_list(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  std::vector<double> out;
  for (const auto& item : split_list(*s)) out.push_back(parse_double(item, key));
  return out;
}

std::optional<std::vector<long long>> KvConfig::get_int_list(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  std::vector<long long> out;
  for (const auto& item : split_list(*s)) out.push_back(parse_int(item, key));
  return out;
}

std::optional<std::vector<std::string>> KvConfig::get_string_list(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  return split_list(*s);
}

}  // namespace hdoms
