#ifndef MEMSDE_HARNESS_CONFIG_HPP
#define MEMSDE_HARNESS_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "memsde/errors.hpp"

namespace memsde::harness {

/// Key-value experiment configuration with nested [section]s, parsed from the
/// strict text format:
///
///   experiment = kb          # top-level key
///   [solver]
///   dt = 1e-3
///   seeds = 1,2,3            # lists are comma-separated
///
/// Unknown keys are rejected at validation time; round-trips through
/// serialize() are lossless.
class Config {
public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  // Canonical form: sections sorted, keys sorted, one "key = value" per line.
  std::string serialize() const;
  // FNV-1a 64 over the canonical serialization, as 16 hex digits.
  std::string hash() const;

  bool has(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& section,
                                          const std::string& key) const;

  /// Reject any (section, key) pair outside the allowed set; allowed entries
  /// are "section.key" ("" section for top-level keys).  Throws ConfigError
  /// naming the first offender.
  void require_known(const std::vector<std::string>& allowed) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::string fnv1a64_hex(const void* data, std::size_t n);

}  // namespace memsde::harness

#endif
