#include "mfd/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mfd/errors.hpp"

namespace mfd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return true;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig c;
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
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError("line " + std::to_string(lineno) + ": invalid key '" + key + "'");
    c.entries_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void KeyValueConfig::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write config file " + path);
  f << serialize();
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
  const std::string v = trim(value);
  if (v.find('#') != std::string::npos || v.find('\n') != std::string::npos)
    throw ConfigError("value for '" + key + "' contains a reserved character");
  entries_[key] = v;
}

void KeyValueConfig::set(const std::string& key, double value) { set(key, format_double(value)); }
void KeyValueConfig::set(const std::string& key, long value) { set(key, std::to_string(value)); }

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "' is not a number: " + s);
  return v;
}

long KeyValueConfig::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "' is not an integer: " + s);
  return v;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}
double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

void KeyValueConfig::merge(const KeyValueConfig& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

}  // namespace mfd
