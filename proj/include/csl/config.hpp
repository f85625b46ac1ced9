#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace csl {

// Flat key = value text format.
//
//   # comment
//   task = "kmeans"
//   m_grid = [16, 32, 64]
//   [decoder]
//   restarts = 2          # stored as "decoder.restarts"
//
// Strings may be quoted; lists use brackets and commas. Keys are unique.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::int64_t> get_ints(const std::string& key,
                                     const std::vector<std::int64_t>& fallback) const;

  // Throws std::invalid_argument naming the first key not in `known`.
  void require_known(const std::set<std::string>& known) const;

  void set(const std::string& key, const std::string& raw) { values_[key] = raw; }

 private:
  std::map<std::string, std::string> values_;  // raw right-hand sides
};

}  // namespace csl
