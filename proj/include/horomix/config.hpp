#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace horomix {

/// Flat experiment configuration: "section.key" -> value text.
///
/// Text format: one `key = value` per line under `[section]` headers; `#`
/// starts a comment; blank lines are ignored. Every key must exist in the
/// defaults, so typos are rejected. Parse and type errors throw ConfigError.
class Config {
 public:
  /// All keys with their default values.
  static Config defaults();

  /// Defaults overlaid with the given text.
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  /// Apply "section.key=value" (a leading "--" is accepted).
  void override_with(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::uint64_t count(const std::string& key) const;  // non-negative integer
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;  // comma separated

  /// Canonical text; parse(to_text()) reproduces the config.
  std::string to_text() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  bool operator==(const Config& other) const { return values_ == other.values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Version string embedded in every output.
std::string version_string();

}  // namespace horomix
