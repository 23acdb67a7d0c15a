#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace datasel {

// Flat `key = value` text. `#` starts a comment; blank lines are ignored;
// repeating a key is an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated lists.
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::uint64_t> get_uints(const std::string& key,
                                       std::vector<std::uint64_t> fallback) const;

  // Throws ParseError naming the first key not in `known` (with its line).
  void reject_unknown(const std::set<std::string>& known) const;

  std::vector<std::string> keys() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  const Entry* entry(const std::string& key) const;

  std::map<std::string, Entry> values_;
};

}  // namespace datasel
