#include "memsde/harness/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace memsde::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  return out;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a64_hex(const void* data, std::size_t n) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(data, n)));
  return std::string(buf);
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      cfg.sections_[section];  // sections may be empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.sections_[section].count(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" +
                        (section.empty() ? key : section + "." + key) + "'");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Config::serialize() const {
  std::string out;
  // top-level keys first, then sections in sorted order (std::map is sorted)
  auto emit = [&out](const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  };
  auto it = sections_.find("");
  if (it != sections_.end()) emit(it->second);
  for (const auto& [name, kv] : sections_) {
    if (name.empty()) continue;
    out += "[" + name + "]\n";
    emit(kv);
  }
  return out;
}

std::string Config::hash() const {
  const std::string s = serialize();
  return fnv1a64_hex(s.data(), s.size());
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  if (it == sections_.end() || !it->second.count(key))
    throw ConfigError("missing required config key '" +
                      (section.empty() ? key : section + "." + key) + "'");
  return it->second.at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + (section.empty() ? key : section + "." + key) +
                      "' is not a number: '" + s + "'");
  }
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get_string(section, key);
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + (section.empty() ? key : section + "." + key) +
                      "' is not an integer: '" + s + "'");
  }
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get_string(section, key);
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + (section.empty() ? key : section + "." + key) +
                      "' is not an unsigned integer: '" + s + "'");
  }
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split_list(get_string(section, key))) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + section + "." + key + "' has a non-numeric item: '" +
                        item + "'");
    }
  }
  if (out.empty())
    throw ConfigError("config key '" + section + "." + key + "' must list at least one value");
  return out;
}

std::vector<std::uint64_t> Config::get_u64_list(const std::string& section,
                                                const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split_list(get_string(section, key))) {
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + section + "." + key + "' has a non-integer item: '" +
                        item + "'");
    }
  }
  if (out.empty())
    throw ConfigError("config key '" + section + "." + key + "' must list at least one value");
  return out;
}

void Config::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [section, kv] : sections_) {
    for (const auto& [key, value] : kv) {
      const std::string qualified = section.empty() ? key : section + "." + key;
      if (std::find(allowed.begin(), allowed.end(), qualified) == allowed.end())
        throw ConfigError("unknown config key '" + qualified + "'");
    }
  }
}

}  // namespace memsde::harness
