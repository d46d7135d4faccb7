#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "fabric/model/field.hpp"

namespace fabric::model {

struct SchemaRef {
  std::string schema_id;
  int version = 0;

  std::string display() const { return schema_id + "@v" + std::to_string(version); }
  Json to_json() const;
  static SchemaRef from_json(const Json& doc);
  auto operator<=>(const SchemaRef&) const = default;
};

// Critical Input Data Elements: gates everything a task ingests.
struct CideSchema {
  std::string schema_id;
  int version = 1;
  std::string task_id;
  std::vector<FieldSpec> fields;

  SchemaRef ref() const { return {schema_id, version}; }
  const FieldSpec* find_field(std::string_view name) const;
  Json to_json() const;
  bool operator==(const CideSchema&) const = default;
};

// Critical Output Data Elements: gates everything a pipeline publishes.
// Never carries sensitive fields; every field is bound to a vocabulary
// term.
struct CodeSchema {
  std::string schema_id;
  int version = 1;
  std::string pipeline_id;
  std::vector<FieldSpec> fields;
  std::map<std::string, std::string> vocabulary_bindings;  // field name -> term

  SchemaRef ref() const { return {schema_id, version}; }
  const FieldSpec* find_field(std::string_view name) const;
  Json to_json() const;
  bool operator==(const CodeSchema&) const = default;
};

using ParsedSchema = std::variant<CideSchema, CodeSchema>;

// Parses a schema document (UTF-8 JSON, see README) and enforces all
// schema invariants. Throws Error(parse_error) on malformed documents and
// Error(invariant_error) when a well-formed document breaks an invariant
// (duplicate field, sensitive CODE field, unbound CODE field, ...).
ParsedSchema parse_schema(const std::string& document);

std::string serialize_schema(const ParsedSchema& schema);

SchemaRef ref_of(const ParsedSchema& schema);

// Inverse of SchemaRef::display: "schema_id@vN" with N >= 1.
std::optional<SchemaRef> schema_ref_from_display(std::string_view text);

}  // namespace fabric::model
