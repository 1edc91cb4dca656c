#pragma once

#include <map>
#include <string>

namespace mfd {

// Flat key = value text config; '#' starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);
  std::string serialize() const;
  void save(const std::string& path) const;

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long value);
  void set(const std::string& key, int value) { set(key, static_cast<long>(value)); }
  void set(const std::string& key, unsigned value) { set(key, static_cast<long>(value)); }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_int(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;

  // Applies `key=value` overrides on top of this config.
  void merge(const KeyValueConfig& other);
  const std::map<std::string, std::string>& entries() const { return entries_; }
  bool operator==(const KeyValueConfig& o) const { return entries_ == o.entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace mfd
