#pragma once

// Checks a document against the subset of JSON Schema used by the shipped report schemas:
// type, enum, required, properties, additionalProperties: false, items, minItems, maxItems,
// minimum and exclusiveMinimum.

#include <json.hpp>

#include <string>
#include <vector>

namespace schema_check {

using json = nlohmann::json;

inline bool has_type(const json &v, const std::string &type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  return false;
}

inline void check(const json &schema, const json &v, const std::string &where, std::vector<std::string> &errors) {
  if (schema.contains("type")) {
    std::vector<std::string> types;
    if (schema["type"].is_array()) {
      for (const auto &t : schema["type"]) types.push_back(t.get<std::string>());
    } else {
      types.push_back(schema["type"].get<std::string>());
    }
    bool ok = false;
    for (const auto &t : types) ok = ok || has_type(v, t);
    if (!ok) {
      errors.push_back(where + ": wrong type");
      return;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto &e : schema["enum"]) ok = ok || e == v;
    if (!ok) errors.push_back(where + ": not an allowed value");
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>()) errors.push_back(where + ": below minimum");
    if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>())
      errors.push_back(where + ": not above exclusiveMinimum");
  }
  if (v.is_object()) {
    if (schema.contains("required")) {
      for (const auto &r : schema["required"]) {
        if (!v.contains(r.get<std::string>())) errors.push_back(where + ": missing " + r.get<std::string>());
      }
    }
    const json props = schema.value("properties", json::object());
    for (const auto &[key, value] : v.items()) {
      if (props.contains(key)) check(props[key], value, where + "." + key, errors);
      else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false)
        errors.push_back(where + ": unexpected " + key);
    }
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
      errors.push_back(where + ": too few items");
    if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>())
      errors.push_back(where + ": too many items");
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(schema["items"], v[i], where + "[" + std::to_string(i) + "]", errors);
    }
  }
}

inline std::vector<std::string> validate(const json &schema, const json &doc) {
  std::vector<std::string> errors;
  check(schema, doc, "$", errors);
  return errors;
}

} // namespace schema_check
