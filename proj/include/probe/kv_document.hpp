#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace probe {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Plain-text `key = value` document. Blank lines and `#` comments are
// ignored; keys are unique. Serialization is sorted by key so that snapshots
// are byte-stable.
class KvDocument {
 public:
  static KvDocument parse(const std::string& text);
  static KvDocument load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> find(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws ConfigError naming the first key not in `allowed`.
  void reject_unknown(const std::set<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string to_string() const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace probe
