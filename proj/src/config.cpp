#include "timefreeze/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace timefreeze {

const ConfigNode* ConfigNode::find(const std::string& key) const {
  if (!is_table()) return nullptr;
  const auto it = table().find(key);
  return it == table().end() ? nullptr : &it->second;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Strips a trailing comment, honoring quoted strings.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

ConfigNode parse_value(const std::string& text, int line_no);

ConfigNode::Array parse_array(const std::string& text, int line_no) {
  ConfigNode::Array items;
  std::string body = trim(text);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']')
    throw ConfigError("line " + std::to_string(line_no) + ": malformed array");
  body = body.substr(1, body.size() - 2);
  // Split at top-level commas.
  int depth = 0;
  bool quoted = false;
  std::string cur;
  for (char c : body) {
    if (c == '"') quoted = !quoted;
    if (!quoted) {
      if (c == '[') ++depth;
      if (c == ']') --depth;
      if (c == ',' && depth == 0) {
        if (!trim(cur).empty()) items.emplace_back(parse_value(trim(cur), line_no));
        cur.clear();
        continue;
      }
    }
    cur.push_back(c);
  }
  if (!trim(cur).empty()) items.emplace_back(parse_value(trim(cur), line_no));
  return items;
}

ConfigNode parse_value(const std::string& text, int line_no) {
  const std::string v = trim(text);
  if (v.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing value");
  if (v.front() == '[') return ConfigNode(parse_array(v, line_no));
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
    return ConfigNode(ConfigNode::Value(v.substr(1, v.size() - 2)));
  }
  if (v == "true") return ConfigNode(ConfigNode::Value(true));
  if (v == "false") return ConfigNode(ConfigNode::Value(false));
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return ConfigNode(ConfigNode::Value(d));
  } catch (const std::exception&) {
  }
  // Bare strings are accepted for scheme/mode names.
  return ConfigNode(ConfigNode::Value(v));
}

ConfigNode::Table* descend(ConfigNode::Table& root, const std::string& dotted, int line_no) {
  ConfigNode::Table* t = &root;
  std::string part;
  std::istringstream path(dotted);
  while (std::getline(path, part, '.')) {
    part = trim(part);
    if (part.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty table name");
    auto [it, inserted] = t->try_emplace(part, ConfigNode());
    if (!it->second.is_table())
      throw ConfigError("line " + std::to_string(line_no) + ": " + part + " is not a table");
    t = &it->second.table();
  }
  return t;
}

ConfigNode from_json(const nlohmann::json& j) {
  if (j.is_object()) {
    ConfigNode::Table t;
    for (const auto& [key, value] : j.items()) t.emplace(key, from_json(value));
    return ConfigNode(ConfigNode::Value(std::move(t)));
  }
  if (j.is_array()) {
    ConfigNode::Array a;
    for (const auto& v : j) a.push_back(from_json(v));
    return ConfigNode(ConfigNode::Value(std::move(a)));
  }
  if (j.is_boolean()) return ConfigNode(ConfigNode::Value(j.get<bool>()));
  if (j.is_number()) return ConfigNode(ConfigNode::Value(j.get<double>()));
  if (j.is_string()) return ConfigNode(ConfigNode::Value(j.get<std::string>()));
  throw ConfigError("unsupported JSON value type");
}

}  // namespace

ConfigNode parse_config_text(const std::string& text) {
  // JSON alternative encoding.
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') {
      try {
        return from_json(nlohmann::json::parse(text));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("JSON parse error: ") + e.what());
      }
    }
    break;
  }

  ConfigNode root;
  ConfigNode::Table* current = &root.table();
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed table header");
      current = descend(root.table(), line.substr(1, line.size() - 2), line_no);
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    ConfigNode::Table* target = current;
    std::string leaf = key;
    if (const size_t dot = key.rfind('.'); dot != std::string::npos) {
      target = descend(*current, key.substr(0, dot), line_no);
      leaf = trim(key.substr(dot + 1));
    }
    if (!target->emplace(leaf, parse_value(line.substr(eq + 1), line_no)).second)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key);
  }
  return root;
}

ConfigNode parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// ---------------------------------------------------------------------------

void ConfigView::fail(const std::string& key, const std::string& what) const {
  const std::string full = path_.empty() ? key : path_ + "." + key;
  throw ConfigError("config key '" + full + "': " + what);
}

bool ConfigView::has(const std::string& key) const { return node_->find(key) != nullptr; }

ConfigView ConfigView::child(const std::string& key) const {
  const ConfigNode* c = node_->find(key);
  if (!c) fail(key, "missing required table");
  if (!c->is_table()) fail(key, "expected a table");
  return {*c, path_.empty() ? key : path_ + "." + key};
}

std::optional<ConfigView> ConfigView::maybe_child(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return child(key);
}

double ConfigView::number(const std::string& key) const {
  const ConfigNode* c = node_->find(key);
  if (!c) fail(key, "missing required number");
  if (!c->is_number()) fail(key, "expected a number");
  return c->number();
}

double ConfigView::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long ConfigView::integer(const std::string& key) const {
  const double d = number(key);
  const long l = static_cast<long>(d);
  if (static_cast<double>(l) != d) fail(key, "expected an integer");
  return l;
}

long ConfigView::integer_or(const std::string& key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool ConfigView::boolean_or(const std::string& key, bool fallback) const {
  const ConfigNode* c = node_->find(key);
  if (!c) return fallback;
  if (!c->is_bool()) fail(key, "expected true or false");
  return c->boolean();
}

std::string ConfigView::str(const std::string& key) const {
  const ConfigNode* c = node_->find(key);
  if (!c) fail(key, "missing required string");
  if (!c->is_string()) fail(key, "expected a string");
  return c->str();
}

std::string ConfigView::str_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

Vec ConfigView::numbers(const std::string& key) const {
  const ConfigNode* c = node_->find(key);
  if (!c) fail(key, "missing required number array");
  if (!c->is_array()) fail(key, "expected an array of numbers");
  Vec out;
  for (const auto& v : c->array()) {
    if (!v.is_number()) fail(key, "expected an array of numbers");
    out.push_back(v.number());
  }
  return out;
}

std::vector<std::string> ConfigView::strings(const std::string& key) const {
  const ConfigNode* c = node_->find(key);
  if (!c) fail(key, "missing required string array");
  if (!c->is_array()) fail(key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& v : c->array()) {
    if (!v.is_string()) fail(key, "expected an array of strings");
    out.push_back(v.str());
  }
  return out;
}

std::vector<Vec> ConfigView::number_rows(const std::string& key) const {
  const ConfigNode* c = node_->find(key);
  if (!c) fail(key, "missing required array of number arrays");
  if (!c->is_array()) fail(key, "expected an array of number arrays");
  std::vector<Vec> out;
  for (const auto& row : c->array()) {
    if (!row.is_array()) fail(key, "expected an array of number arrays");
    Vec r;
    for (const auto& v : row.array()) {
      if (!v.is_number()) fail(key, "expected numbers inside the rows");
      r.push_back(v.number());
    }
    out.push_back(std::move(r));
  }
  return out;
}

void ConfigView::allow_only(const std::vector<std::string>& keys) const {
  for (const auto& [key, value] : node_->table()) {
    bool ok = false;
    for (const auto& k : keys)
      if (k == key) ok = true;
    if (!ok) fail(key, "unknown key");
  }
}

}  // namespace timefreeze
