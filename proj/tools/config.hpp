#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace roughevo::cli {

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Read-only view of a JSON config node that records which keys were read, so that
/// `finish()` can reject unknown keys.
class Node {
public:
  Node(const nlohmann::json& value, std::string path);

  const std::string& path() const { return path_; }
  const nlohmann::json& raw() const { return *value_; }
  bool is_object() const { return value_->is_object(); }
  bool is_array() const { return value_->is_array(); }
  bool is_number() const { return value_->is_number(); }
  bool is_string() const { return value_->is_string(); }

  bool has(const std::string& key) const;
  Node at(const std::string& key) const;
  std::optional<Node> get(const std::string& key) const;

  std::size_t size() const;
  Node operator[](std::size_t i) const;

  double as_number() const;
  std::int64_t as_integer() const;
  std::string as_string() const;
  std::vector<double> as_numbers() const;

  double number(const std::string& key) const { return at(key).as_number(); }
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const { return at(key).as_integer(); }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::string string(const std::string& key) const { return at(key).as_string(); }
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const { return at(key).as_numbers(); }

  /// Marks a key as read without interpreting it.
  void touch(const std::string& key) const;
  /// Throws ConfigError naming every key of this object that was never read.
  void finish() const;

  [[noreturn]] void fail(const std::string& message) const;

private:
  const nlohmann::json* value_;
  std::string path_;
  std::shared_ptr<std::set<std::string>> used_;
};

nlohmann::json load_config(const std::filesystem::path& file);

}  // namespace roughevo::cli
