#pragma once

#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "copercept/core/error.hpp"

namespace copercept::yaml {

inline std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

template <typename T>
T as(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field, "has the wrong type");
  }
}

/// Reads node[key] into `out` if present.
template <typename T>
void read(const YAML::Node& node, const std::string& key, const std::string& parent, T& out) {
  const YAML::Node child = node[key];
  if (child) out = as<T>(child, join(parent, key));
}

template <typename T>
std::vector<T> as_list(const YAML::Node& node, const std::string& field) {
  if (node.IsScalar()) return {as<T>(node, field)};
  if (!node.IsSequence()) throw ConfigError(field, "must be a value or a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(as<T>(node[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

/// Rejects keys outside `allowed` so typos fail loudly.
inline void check_keys(const YAML::Node& node, const std::string& parent, const std::vector<std::string>& allowed) {
  if (!node) return;
  if (!node.IsMap()) throw ConfigError(parent.empty() ? "<root>" : parent, "must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    bool ok = false;
    for (const std::string& a : allowed) ok = ok || a == key;
    if (!ok) throw ConfigError(join(parent, key), "unknown key");
  }
}

}  // namespace copercept::yaml
