#include "strata/config.h"

#include <fstream>
#include <sstream>

#include "strata/errors.h"

namespace strata {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config config;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string content = trim(raw);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line);
    std::string key = trim(std::string_view(content).substr(0, eq));
    if (key.empty()) throw ParseError("empty config key", line);
    if (!config.entries_.emplace(key, trim(std::string_view(content).substr(eq + 1))).second) {
      throw ParseError("duplicate config key '" + key + "'", line);
    }
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

}  // namespace strata
