#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace trajpred {

// Plain-text key-value configuration: one "key = value" per line, '#' comments.
// Keys are kept sorted so a serialized config is deterministic.
struct KeyValueConfig {
  std::map<std::string, std::string> values;

  static KeyValueConfig parse_text(const std::string& text, const std::string& origin = "<text>");
  static KeyValueConfig parse_file(const std::string& path);

  bool has(const std::string& key) const { return values.count(key) != 0; }

  std::string get_str(const std::string& key) const;  // throws if missing
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { values[key] = value; }
  void set_double(const std::string& key, double v);
  void set_int(const std::string& key, std::int64_t v);

  std::string serialize() const;
  void write_file(const std::string& path) const;
};

}  // namespace trajpred
