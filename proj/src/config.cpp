#include "nids/config.hpp"

#include <fstream>
#include <sstream>

#include "nids/error.hpp"
#include "nids/text.hpp"

namespace nids {

KeyValueConfig KeyValueConfig::parse(std::string_view input, std::string_view origin) {
  KeyValueConfig config;
  std::string section;
  std::size_t line_number = 0;
  for (auto raw : text::split(input, '\n')) {
    ++line_number;
    auto line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;

    const auto where = std::string(origin) + ":" + std::to_string(line_number);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      config.blocks_.try_emplace(section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      if (section.empty()) throw ConfigError(where + ": expected 'key = value'");
      config.blocks_[section].emplace_back(line);
      continue;
    }
    auto key = std::string(text::trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!section.empty()) key = section + "." + key;
    config.values_[key] = std::string(text::trim(line.substr(eq + 1)));
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  auto parsed = text::to_int(*value);
  if (!parsed) throw ConfigError("'" + key + "' expects an integer, got '" + *value + "'");
  return *parsed;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  auto parsed = text::to_double(*value);
  if (!parsed) throw ConfigError("'" + key + "' expects a number, got '" + *value + "'");
  return *parsed;
}

const std::vector<std::string>& KeyValueConfig::block(const std::string& section) const {
  static const std::vector<std::string> empty;
  auto it = blocks_.find(section);
  return it == blocks_.end() ? empty : it->second;
}

void KeyValueConfig::set_block(const std::string& section, std::vector<std::string> lines) {
  blocks_[section] = std::move(lines);
}

void KeyValueConfig::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    bool ok = false;
    for (const auto& a : allowed) {
      if (key == a || (a.ends_with('.') && key.starts_with(a))) ok = true;
    }
    if (!ok) throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string KeyValueConfig::render() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  for (const auto& [section, lines] : blocks_) {
    if (lines.empty()) continue;
    out += "[" + section + "]\n";
    for (const auto& line : lines) out += line + "\n";
  }
  return out;
}

}  // namespace nids
