#include "ctdb/schema.hpp"

#include <cmath>
#include <regex>
#include <set>
#include <stdexcept>
#include <string_view>

namespace ctdb {

extern const char* const kMetadataSchemaText;

namespace {

using nlohmann::json;

const std::set<std::string, std::less<>> kKnownKeywords{
    "$schema", "$id", "$defs", "$ref", "title", "description", "type", "enum", "const", "required",
    "properties", "additionalProperties", "minProperties", "items", "minItems", "maxItems", "minimum",
    "maximum", "exclusiveMinimum", "exclusiveMaximum", "minLength", "maxLength", "pattern"};

bool has_type(const json& v, std::string_view type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
      const double d = v.get<double>();
      return std::isfinite(d) && d == std::floor(d);
    }
    return false;
  }
  throw std::invalid_argument("unsupported schema type " + std::string(type));
}

std::size_t utf8_length(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xc0) != 0x80) ++n;
  }
  return n;
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& v, const json& s, const std::string& where) {
    if (s.is_boolean()) {
      if (!s.get<bool>()) fail(where, "no value is allowed here");
      return;
    }
    if (!s.is_object()) throw std::invalid_argument("schema node is not an object");
    for (const auto& [key, _] : s.items()) {
      if (!kKnownKeywords.contains(key)) throw std::invalid_argument("unsupported schema keyword " + key);
    }
    if (auto it = s.find("$ref"); it != s.end()) check(v, resolve(it->get<std::string>()), where);
    if (auto it = s.find("type"); it != s.end()) check_type(v, *it, where);
    if (auto it = s.find("enum"); it != s.end()) {
      bool found = false;
      for (const auto& option : *it) found = found || option == v;
      if (!found) fail(where, "value " + v.dump() + " is not one of " + it->dump());
    }
    if (auto it = s.find("const"); it != s.end() && *it != v) fail(where, "value must be " + it->dump());
    if (v.is_object()) check_object(v, s, where);
    if (v.is_array()) check_array(v, s, where);
    if (v.is_number()) check_number(v.get<double>(), s, where);
    if (v.is_string()) check_string(v.get<std::string>(), s, where);
  }

  std::vector<std::string> errors;

 private:
  void fail(const std::string& where, const std::string& what) {
    errors.push_back((where.empty() ? "/" : where) + ": " + what);
  }

  const json& resolve(const std::string& ref) {
    constexpr std::string_view prefix = "#/$defs/";
    if (!ref.starts_with(prefix)) throw std::invalid_argument("unsupported $ref " + ref);
    const auto name = ref.substr(prefix.size());
    if (!root_.contains("$defs") || !root_.at("$defs").contains(name)) throw std::invalid_argument("unresolved $ref " + ref);
    return root_.at("$defs").at(name);
  }

  void check_type(const json& v, const json& type, const std::string& where) {
    if (type.is_string()) {
      if (!has_type(v, type.get<std::string>())) fail(where, "expected " + type.get<std::string>());
      return;
    }
    for (const auto& t : type) {
      if (has_type(v, t.get<std::string>())) return;
    }
    fail(where, "expected one of " + type.dump());
  }

  void check_object(const json& v, const json& s, const std::string& where) {
    if (auto it = s.find("required"); it != s.end()) {
      for (const auto& key : *it) {
        if (!v.contains(key.get<std::string>())) fail(where, "missing required property " + key.get<std::string>());
      }
    }
    if (auto it = s.find("minProperties"); it != s.end() && v.size() < it->get<std::size_t>()) {
      fail(where, "too few properties");
    }
    const json* props = s.contains("properties") ? &s.at("properties") : nullptr;
    const json* extra = s.contains("additionalProperties") ? &s.at("additionalProperties") : nullptr;
    for (const auto& [key, value] : v.items()) {
      const std::string child = where + "/" + key;
      if (props && props->contains(key)) {
        check(value, props->at(key), child);
      } else if (extra) {
        if (extra->is_boolean() && !extra->get<bool>()) {
          fail(where, "unexpected property " + key);
        } else {
          check(value, *extra, child);
        }
      }
    }
  }

  void check_array(const json& v, const json& s, const std::string& where) {
    if (auto it = s.find("minItems"); it != s.end() && v.size() < it->get<std::size_t>()) fail(where, "too few items");
    if (auto it = s.find("maxItems"); it != s.end() && v.size() > it->get<std::size_t>()) fail(where, "too many items");
    if (auto it = s.find("items"); it != s.end()) {
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], *it, where + "/" + std::to_string(i));
    }
  }

  void check_number(double x, const json& s, const std::string& where) {
    if (auto it = s.find("minimum"); it != s.end() && x < it->get<double>()) fail(where, "below minimum");
    if (auto it = s.find("maximum"); it != s.end() && x > it->get<double>()) fail(where, "above maximum");
    if (auto it = s.find("exclusiveMinimum"); it != s.end() && !(x > it->get<double>())) {
      fail(where, "not above exclusive minimum");
    }
    if (auto it = s.find("exclusiveMaximum"); it != s.end() && !(x < it->get<double>())) {
      fail(where, "not below exclusive maximum");
    }
  }

  void check_string(const std::string& x, const json& s, const std::string& where) {
    const std::size_t len = utf8_length(x);
    if (auto it = s.find("minLength"); it != s.end() && len < it->get<std::size_t>()) fail(where, "string too short");
    if (auto it = s.find("maxLength"); it != s.end() && len > it->get<std::size_t>()) fail(where, "string too long");
    if (auto it = s.find("pattern"); it != s.end()) {
      const std::regex re(it->get<std::string>(), std::regex::ECMAScript);
      if (!std::regex_search(x, re)) fail(where, "does not match pattern " + it->get<std::string>());
    }
  }

  const json& root_;
};

}  // namespace

std::vector<std::string> validate_json(const nlohmann::json& instance, const nlohmann::json& schema) {
  Validator v(schema);
  v.check(instance, schema, "");
  return std::move(v.errors);
}

const nlohmann::json& metadata_schema() {
  static const nlohmann::json schema = nlohmann::json::parse(kMetadataSchemaText);
  return schema;
}

}  // namespace ctdb
