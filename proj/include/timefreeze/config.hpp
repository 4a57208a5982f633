#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "timefreeze/linalg.hpp"

namespace timefreeze {

/// Parsed configuration tree. Scalars are doubles, booleans or strings;
/// arrays are homogeneous values; tables nest.
class ConfigNode {
public:
  using Table = std::map<std::string, ConfigNode>;
  using Array = std::vector<ConfigNode>;
  using Value = std::variant<double, bool, std::string, Array, Table>;

  ConfigNode() : value_(Table{}) {}
  explicit ConfigNode(Value v) : value_(std::move(v)) {}

  bool is_table() const { return std::holds_alternative<Table>(value_); }
  bool is_array() const { return std::holds_alternative<Array>(value_); }
  bool is_number() const { return std::holds_alternative<double>(value_); }
  bool is_bool() const { return std::holds_alternative<bool>(value_); }
  bool is_string() const { return std::holds_alternative<std::string>(value_); }

  Table& table() { return std::get<Table>(value_); }
  const Table& table() const { return std::get<Table>(value_); }
  const Array& array() const { return std::get<Array>(value_); }
  double number() const { return std::get<double>(value_); }
  bool boolean() const { return std::get<bool>(value_); }
  const std::string& str() const { return std::get<std::string>(value_); }

  const ConfigNode* find(const std::string& key) const;

private:
  Value value_;
};

/// Thrown for parse failures and schema violations; the message names the
/// offending key or input position.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parses the key-value tree format: [section] headers (dotted for nesting),
/// key = value lines with numbers, booleans, "strings" and [arrays], and #
/// comments. Text starting with { is treated as JSON instead.
ConfigNode parse_config_text(const std::string& text);
ConfigNode parse_config_file(const std::string& path);

/// Typed accessors used by the schema validation; every error names the key.
class ConfigView {
public:
  ConfigView(const ConfigNode& node, std::string path) : node_(&node), path_(std::move(path)) {}

  bool has(const std::string& key) const;
  ConfigView child(const std::string& key) const;
  std::optional<ConfigView> maybe_child(const std::string& key) const;

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer_or(const std::string& key, long fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& fallback) const;
  Vec numbers(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;
  std::vector<Vec> number_rows(const std::string& key) const;

  /// Rejects keys outside the allowed set ("unknown key ...").
  void allow_only(const std::vector<std::string>& keys) const;

  const std::string& path() const { return path_; }
  const ConfigNode& node() const { return *node_; }

private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
  const ConfigNode* node_;
  std::string path_;
};

}  // namespace timefreeze
