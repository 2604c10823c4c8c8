#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace langvec::cli {

/// Bad flags, bad config lines or missing required keys (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration. Later assignments win.
class RunConfig {
 public:
  /// Every key the tool understands.
  static const std::vector<std::string>& known_keys();
  static bool is_known(std::string_view key);

  /// Parses config text; `origin` names the source in error messages.
  static RunConfig parse(std::string_view text, const std::string& origin = "config");
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  /// `key=value` as given to `--set`.
  void set_assignment(std::string_view assignment);
  /// Copies every value of `other` over this one.
  void merge(const RunConfig& other);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> find(const std::string& key) const;
  /// Throws UsageError when the key is unset.
  const std::string& require(const std::string& key) const;

  std::string text(const std::string& key, const std::string& fallback) const;
  std::size_t size(const std::string& key, std::size_t fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  double real(const std::string& key, double fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  /// Comma separated; empty items are dropped.
  std::vector<std::string> list(const std::string& key) const;
  std::vector<std::size_t> sizes(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// `key = value` lines, sorted by key.
std::string format_config(const std::map<std::string, std::string>& values);

}  // namespace langvec::cli
