#include "fabric/model/field.hpp"

#include <set>

#include "fabric/error.hpp"

namespace fabric::model {

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::string_kind: return "string";
    case FieldKind::integer_kind: return "integer";
    case FieldKind::float_kind: return "float";
    case FieldKind::boolean_kind: return "boolean";
    case FieldKind::timestamp_kind: return "timestamp";
    case FieldKind::enum_kind: return "enum";
    case FieldKind::blob_ref_kind: return "blob_ref";
  }
  return "string";
}

std::optional<FieldKind> field_kind_from_string(std::string_view text) {
  if (text == "string") return FieldKind::string_kind;
  if (text == "integer") return FieldKind::integer_kind;
  if (text == "float") return FieldKind::float_kind;
  if (text == "boolean") return FieldKind::boolean_kind;
  if (text == "timestamp") return FieldKind::timestamp_kind;
  if (text == "enum") return FieldKind::enum_kind;
  if (text == "blob_ref") return FieldKind::blob_ref_kind;
  return std::nullopt;
}

bool is_identifier(std::string_view text) {
  if (text.empty() || text.size() > 64) return false;
  if (text.front() < 'a' || text.front() > 'z') return false;
  for (const char c : text) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

bool FieldConstraints::empty() const {
  return !min && !max && !max_length && enum_values.empty() && !ts_min && !ts_max;
}

Json FieldSpec::to_json() const {
  Json doc;
  doc["name"] = name;
  doc["kind"] = to_string(kind);
  doc["required"] = required;
  if (unit) doc["unit"] = *unit;
  if (sensitive) doc["sensitive"] = true;
  if (!constraints.empty()) {
    Json c;
    if (constraints.min) c["min"] = *constraints.min;
    if (constraints.max) c["max"] = *constraints.max;
    if (constraints.max_length) c["max_length"] = *constraints.max_length;
    if (!constraints.enum_values.empty()) c["values"] = constraints.enum_values;
    if (constraints.ts_min) c["min"] = constraints.ts_min->to_rfc3339();
    if (constraints.ts_max) c["max"] = constraints.ts_max->to_rfc3339();
    doc["constraints"] = c;
  }
  return doc;
}

FieldSpec field_spec_from_json(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::parse_error, "field spec must be an object");
  FieldSpec spec;
  if (!doc.contains("name") || !doc["name"].is_string()) {
    throw Error(ErrorCode::parse_error, "field spec missing string 'name'");
  }
  spec.name = doc["name"].get<std::string>();
  if (!is_identifier(spec.name)) {
    throw Error(ErrorCode::invariant_error,
                "field name '" + spec.name + "' is not a lowercase snake identifier");
  }
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    throw Error(ErrorCode::parse_error, "field '" + spec.name + "' missing string 'kind'");
  }
  const auto kind = field_kind_from_string(doc["kind"].get<std::string>());
  if (!kind) {
    throw Error(ErrorCode::parse_error,
                "field '" + spec.name + "' has unknown kind '" +
                    doc["kind"].get<std::string>() + "'");
  }
  spec.kind = *kind;
  for (const auto& [key, value] : doc.items()) {
    if (key == "name" || key == "kind") continue;
    if (key == "required") {
      if (!value.is_boolean()) throw Error(ErrorCode::parse_error, "'required' must be boolean");
      spec.required = value.get<bool>();
    } else if (key == "unit") {
      if (!value.is_string()) throw Error(ErrorCode::parse_error, "'unit' must be a string");
      spec.unit = value.get<std::string>();
    } else if (key == "sensitive") {
      if (!value.is_boolean()) throw Error(ErrorCode::parse_error, "'sensitive' must be boolean");
      spec.sensitive = value.get<bool>();
    } else if (key == "constraints") {
      // handled below
    } else {
      throw Error(ErrorCode::parse_error,
                  "field '" + spec.name + "' has unknown key '" + key + "'");
    }
  }

  if (doc.contains("constraints")) {
    const Json& c = doc["constraints"];
    if (!c.is_object()) {
      throw Error(ErrorCode::parse_error, "field '" + spec.name + "' constraints must be object");
    }
    const bool numeric =
        spec.kind == FieldKind::integer_kind || spec.kind == FieldKind::float_kind;
    for (const auto& [key, value] : c.items()) {
      if (key == "min" || key == "max") {
        if (numeric) {
          if (!value.is_number()) {
            throw Error(ErrorCode::parse_error,
                        "numeric field '" + spec.name + "' " + key + " must be a number");
          }
          (key == "min" ? spec.constraints.min : spec.constraints.max) = value.get<double>();
        } else if (spec.kind == FieldKind::timestamp_kind) {
          if (!value.is_string()) {
            throw Error(ErrorCode::parse_error,
                        "timestamp field '" + spec.name + "' " + key + " must be a string");
          }
          const auto t = parse_rfc3339(value.get<std::string>());
          if (!t) {
            throw Error(ErrorCode::parse_error,
                        "timestamp field '" + spec.name + "' " + key + " is not RFC 3339 UTC");
          }
          (key == "min" ? spec.constraints.ts_min : spec.constraints.ts_max) = *t;
        } else {
          throw Error(ErrorCode::invariant_error,
                      "constraint '" + key + "' not valid for kind " + to_string(spec.kind) +
                          " on field '" + spec.name + "'");
        }
      } else if (key == "max_length") {
        if (spec.kind != FieldKind::string_kind || !value.is_number_unsigned()) {
          throw Error(ErrorCode::invariant_error,
                      "'max_length' only valid for string fields, got it on '" + spec.name + "'");
        }
        spec.constraints.max_length = value.get<std::size_t>();
      } else if (key == "values") {
        if (spec.kind != FieldKind::enum_kind || !value.is_array()) {
          throw Error(ErrorCode::invariant_error,
                      "'values' only valid for enum fields, got it on '" + spec.name + "'");
        }
        for (const auto& v : value) {
          if (!v.is_string()) {
            throw Error(ErrorCode::parse_error, "enum values must be strings");
          }
          spec.constraints.enum_values.push_back(v.get<std::string>());
        }
      } else {
        throw Error(ErrorCode::parse_error,
                    "field '" + spec.name + "' has unknown constraint '" + key + "'");
      }
    }
  }

  if (spec.kind == FieldKind::enum_kind && spec.constraints.enum_values.empty()) {
    throw Error(ErrorCode::invariant_error,
                "enum field '" + spec.name + "' must declare a non-empty value list");
  }
  if (spec.constraints.min && spec.constraints.max && *spec.constraints.min > *spec.constraints.max) {
    throw Error(ErrorCode::invariant_error, "field '" + spec.name + "' has min > max");
  }
  if (spec.constraints.ts_min && spec.constraints.ts_max &&
      *spec.constraints.ts_min > *spec.constraints.ts_max) {
    throw Error(ErrorCode::invariant_error, "field '" + spec.name + "' has min > max");
  }
  return spec;
}

}  // namespace fabric::model
