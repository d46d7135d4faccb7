#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "fabric/time.hpp"

namespace fabric::model {

using Json = nlohmann::json;

enum class FieldKind {
  string_kind,
  integer_kind,
  float_kind,
  boolean_kind,
  timestamp_kind,
  enum_kind,
  blob_ref_kind,
};

std::string to_string(FieldKind kind);
std::optional<FieldKind> field_kind_from_string(std::string_view text);

// lowercase snake, 1-64 chars, leading letter
bool is_identifier(std::string_view text);

struct FieldConstraints {
  std::optional<double> min;              // integer/float, inclusive
  std::optional<double> max;              // integer/float, inclusive
  std::optional<std::size_t> max_length;  // string
  std::vector<std::string> enum_values;   // enum
  std::optional<Instant> ts_min;          // timestamp, inclusive
  std::optional<Instant> ts_max;          // timestamp, inclusive

  bool empty() const;
  bool operator==(const FieldConstraints&) const = default;
};

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::string_kind;
  bool required = false;
  std::optional<std::string> unit;
  FieldConstraints constraints;
  bool sensitive = false;

  Json to_json() const;
  bool operator==(const FieldSpec&) const = default;
};

// Parses and checks the per-field invariants (identifier name, enum value
// list present, min<=max, constraint keys legal for the kind).
FieldSpec field_spec_from_json(const Json& doc);

}  // namespace fabric::model
