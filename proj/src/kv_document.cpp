#include "probe/kv_document.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace probe {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvDocument KvDocument::parse(const std::string& text) {
  KvDocument doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (doc.contains(key)) throw ConfigError("duplicate key: " + key);
    doc.entries_[key] = value;
  }
  return doc;
}

KvDocument KvDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KvDocument::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void KvDocument::set(const std::string& key, double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  entries_[key] = std::string(buf, res.ptr);
}

void KvDocument::set(const std::string& key, long long value) {
  entries_[key] = std::to_string(value);
}

std::optional<std::string> KvDocument::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KvDocument::get_string(const std::string& key) const {
  const auto v = find(key);
  if (!v) throw ConfigError("missing key: " + key);
  return *v;
}

double KvDocument::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("key " + key + ": not a number: " + v);
  }
  return out;
}

long long KvDocument::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("key " + key + ": not an integer: " + v);
  }
  return out;
}

bool KvDocument::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key " + key + ": not a boolean: " + v);
}

std::string KvDocument::get_string(const std::string& key, const std::string& fallback) const {
  return contains(key) ? get_string(key) : fallback;
}
double KvDocument::get_double(const std::string& key, double fallback) const {
  return contains(key) ? get_double(key) : fallback;
}
long long KvDocument::get_int(const std::string& key, long long fallback) const {
  return contains(key) ? get_int(key) : fallback;
}
bool KvDocument::get_bool(const std::string& key, bool fallback) const {
  return contains(key) ? get_bool(key) : fallback;
}

void KvDocument::reject_unknown(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : entries_) {
    if (!allowed.count(key)) throw ConfigError("unknown key: " + key);
  }
}

std::string KvDocument::to_string() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
  return out;
}

void KvDocument::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_string();
}

}  // namespace probe
