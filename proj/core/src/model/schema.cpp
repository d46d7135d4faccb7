#include "fabric/model/schema.hpp"

#include <set>

#include "fabric/error.hpp"

namespace fabric::model {
namespace {

// Envelope field names are carried next to every payload and may not be
// shadowed by schema fields.
const std::set<std::string, std::less<>> kReservedNames = {
    "study_id", "participant_id", "device_id", "task_id", "capture_time"};

void check_common(const Json& doc, std::string& schema_id, int& version,
                  std::vector<FieldSpec>& fields) {
  if (!doc.contains("schema_id") || !doc["schema_id"].is_string()) {
    throw Error(ErrorCode::parse_error, "missing string 'schema_id'");
  }
  schema_id = doc["schema_id"].get<std::string>();
  if (!is_identifier(schema_id)) {
    throw Error(ErrorCode::invariant_error, "schema_id '" + schema_id + "' is not an identifier");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw Error(ErrorCode::parse_error, "missing integer 'version'");
  }
  version = doc["version"].get<int>();
  if (version <= 0) throw Error(ErrorCode::invariant_error, "version must be positive");
  if (!doc.contains("fields") || !doc["fields"].is_array()) {
    throw Error(ErrorCode::parse_error, "missing array 'fields'");
  }
  std::set<std::string> seen;
  for (const auto& item : doc["fields"]) {
    FieldSpec spec = field_spec_from_json(item);
    if (!seen.insert(spec.name).second) {
      throw Error(ErrorCode::invariant_error, "duplicate field name '" + spec.name + "'");
    }
    if (kReservedNames.count(spec.name)) {
      throw Error(ErrorCode::invariant_error,
                  "field name '" + spec.name + "' collides with a record envelope field");
    }
    fields.push_back(std::move(spec));
  }
}

std::string require_identifier(const Json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_string()) {
    throw Error(ErrorCode::parse_error, std::string("missing string '") + key + "'");
  }
  const auto value = doc[key].get<std::string>();
  if (!is_identifier(value)) {
    throw Error(ErrorCode::invariant_error,
                std::string(key) + " '" + value + "' is not an identifier");
  }
  return value;
}

}  // namespace

Json SchemaRef::to_json() const { return Json{{"schema_id", schema_id}, {"version", version}}; }

SchemaRef SchemaRef::from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("schema_id") || !doc["schema_id"].is_string() ||
      !doc.contains("version") || !doc["version"].is_number_integer()) {
    throw Error(ErrorCode::parse_error, "schema ref must be {schema_id, version}");
  }
  return {doc["schema_id"].get<std::string>(), doc["version"].get<int>()};
}

const FieldSpec* CideSchema::find_field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const FieldSpec* CodeSchema::find_field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

Json CideSchema::to_json() const {
  Json doc;
  doc["schema_id"] = schema_id;
  doc["version"] = version;
  doc["kind"] = "cide";
  doc["task_id"] = task_id;
  doc["fields"] = Json::array();
  for (const auto& f : fields) doc["fields"].push_back(f.to_json());
  return doc;
}

Json CodeSchema::to_json() const {
  Json doc;
  doc["schema_id"] = schema_id;
  doc["version"] = version;
  doc["kind"] = "code";
  doc["pipeline_id"] = pipeline_id;
  doc["fields"] = Json::array();
  for (const auto& f : fields) doc["fields"].push_back(f.to_json());
  doc["vocabulary_bindings"] = vocabulary_bindings;
  return doc;
}

ParsedSchema parse_schema(const std::string& document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::parse_error, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::parse_error, "schema document must be an object");
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    throw Error(ErrorCode::parse_error, "missing string 'kind' (\"cide\" or \"code\")");
  }
  const auto kind = doc["kind"].get<std::string>();
  const auto check_keys = [&doc](std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, _] : doc.items()) {
      bool ok = false;
      for (const auto a : allowed) ok |= key == a;
      if (!ok) {
        throw Error(ErrorCode::parse_error, "schema document has unknown key '" + key + "'");
      }
    }
  };

  if (kind == "cide") {
    check_keys({"schema_id", "version", "kind", "task_id", "fields"});
    CideSchema schema;
    check_common(doc, schema.schema_id, schema.version, schema.fields);
    schema.task_id = require_identifier(doc, "task_id");
    return schema;
  }
  if (kind == "code") {
    check_keys({"schema_id", "version", "kind", "pipeline_id", "fields", "vocabulary_bindings"});
    CodeSchema schema;
    check_common(doc, schema.schema_id, schema.version, schema.fields);
    schema.pipeline_id = require_identifier(doc, "pipeline_id");
    if (!doc.contains("vocabulary_bindings") || !doc["vocabulary_bindings"].is_object()) {
      throw Error(ErrorCode::parse_error, "code schema missing object 'vocabulary_bindings'");
    }
    for (const auto& [field, term] : doc["vocabulary_bindings"].items()) {
      if (!term.is_string()) {
        throw Error(ErrorCode::parse_error, "vocabulary binding for '" + field + "' must be a string");
      }
      schema.vocabulary_bindings[field] = term.get<std::string>();
    }
    for (const auto& f : schema.fields) {
      if (f.sensitive) {
        throw Error(ErrorCode::invariant_error,
                    "SENSITIVE_IN_CODE: field '" + f.name + "' is marked sensitive");
      }
      if (!schema.vocabulary_bindings.count(f.name)) {
        throw Error(ErrorCode::invariant_error,
                    "UNBOUND_VOCABULARY: field '" + f.name + "' has no vocabulary binding");
      }
    }
    for (const auto& [field, term] : schema.vocabulary_bindings) {
      if (!schema.find_field(field)) {
        throw Error(ErrorCode::invariant_error,
                    "vocabulary binding names unknown field '" + field + "'");
      }
      if (!is_identifier(term)) {
        throw Error(ErrorCode::invariant_error,
                    "vocabulary term '" + term + "' is not an identifier");
      }
    }
    return schema;
  }
  throw Error(ErrorCode::parse_error, "unknown schema kind '" + kind + "'");
}

std::string serialize_schema(const ParsedSchema& schema) {
  const Json doc = std::visit([](const auto& s) { return s.to_json(); }, schema);
  return doc.dump(2) + "\n";
}

SchemaRef ref_of(const ParsedSchema& schema) {
  return std::visit([](const auto& s) { return s.ref(); }, schema);
}

std::optional<SchemaRef> schema_ref_from_display(std::string_view text) {
  const auto at = text.find("@v");
  if (at == std::string_view::npos || at == 0 || at + 2 >= text.size()) return std::nullopt;
  const auto digits = text.substr(at + 2);
  if (digits.find_first_not_of("0123456789") != std::string_view::npos) return std::nullopt;
  int version = 0;
  for (const char c : digits) {
    if (version > 100000000) return std::nullopt;
    version = version * 10 + (c - '0');
  }
  if (version < 1) return std::nullopt;
  return SchemaRef{std::string(text.substr(0, at)), version};
}

}  // namespace fabric::model
