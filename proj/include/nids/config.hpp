#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nids {

// Plain-text `key = value` configuration. `[section]` headers prefix the keys
// that follow with "section."; lines without '=' inside a section are kept
// verbatim as that section's block (used for attack schedules).
class KeyValueConfig {
public:
  static KeyValueConfig parse(std::string_view text, std::string_view origin = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  const std::vector<std::string>& block(const std::string& section) const;
  void set_block(const std::string& section, std::vector<std::string> lines);

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  const std::map<std::string, std::vector<std::string>>& blocks() const noexcept { return blocks_; }

  // Throws ConfigError naming the first key outside `allowed` (exact keys, or
  // prefixes ending in '.').
  void require_known(const std::vector<std::string>& allowed) const;

  // Canonical text, sorted by key; parse(render()) reproduces the config.
  std::string render() const;

private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::vector<std::string>> blocks_;
};

}  // namespace nids
