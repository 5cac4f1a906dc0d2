#include "config.hpp"

#include <cmath>
#include <fstream>

namespace roughevo::cli {

Node::Node(const nlohmann::json& value, std::string path)
    : value_(&value), path_(std::move(path)), used_(std::make_shared<std::set<std::string>>()) {}

void Node::fail(const std::string& message) const { throw ConfigError(path_ + ": " + message); }

bool Node::has(const std::string& key) const { return value_->is_object() && value_->contains(key); }

Node Node::at(const std::string& key) const {
  if (!value_->is_object()) fail("expected an object");
  auto it = value_->find(key);
  if (it == value_->end()) fail("missing required key '" + key + "'");
  used_->insert(key);
  return Node(*it, path_ + "." + key);
}

std::optional<Node> Node::get(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return at(key);
}

std::size_t Node::size() const {
  if (!value_->is_array()) fail("expected an array");
  return value_->size();
}

Node Node::operator[](std::size_t i) const {
  if (!value_->is_array() || i >= value_->size()) fail("expected an array with entry " + std::to_string(i));
  return Node((*value_)[i], path_ + "[" + std::to_string(i) + "]");
}

double Node::as_number() const {
  if (!value_->is_number()) fail("expected a number");
  return value_->get<double>();
}

std::int64_t Node::as_integer() const {
  const double v = as_number();
  if (v != std::floor(v)) fail("expected an integer");
  return static_cast<std::int64_t>(v);
}

std::string Node::as_string() const {
  if (!value_->is_string()) fail("expected a string");
  return value_->get<std::string>();
}

std::vector<double> Node::as_numbers() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].as_number());
  return out;
}

double Node::number(const std::string& key, double fallback) const {
  return has(key) ? at(key).as_number() : fallback;
}

std::int64_t Node::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? at(key).as_integer() : fallback;
}

std::string Node::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? at(key).as_string() : fallback;
}

bool Node::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Node n = at(key);
  if (!n.raw().is_boolean()) n.fail("expected a boolean");
  return n.raw().get<bool>();
}

void Node::touch(const std::string& key) const { used_->insert(key); }

void Node::finish() const {
  if (!value_->is_object()) return;
  std::string unknown;
  for (auto it = value_->begin(); it != value_->end(); ++it)
    if (!used_->count(it.key())) unknown += (unknown.empty() ? "" : ", ") + it.key();
  if (!unknown.empty()) fail("unknown key(s): " + unknown);
}

nlohmann::json load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string() + ": cannot open config");
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

}  // namespace roughevo::cli
