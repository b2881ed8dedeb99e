#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace strata {

/// Flat `key = value` settings. '#' starts a comment line; blank lines are
/// skipped; keys and values are trimmed. A repeated key or a line without
/// '=' raises ParseError with its line number.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace strata
