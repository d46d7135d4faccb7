#pragma once

#include <string>
#include <vector>

#include "fabric/model/schema.hpp"
#include "fabric/model/vocabulary.hpp"
#include "fabric/table.hpp"

namespace fabric::model {

enum class ViolationCode {
  missing_required,
  unknown_field,
  type_mismatch,
  range_violation,
  enum_violation,
  unit_mismatch,
  sensitive_in_code,
  unbound_vocabulary,
  unknown_term,
  term_not_accepted,
  schema_not_found,
};

// Upper-case wire names, e.g. "MISSING_REQUIRED".
std::string to_string(ViolationCode code);
std::optional<ViolationCode> violation_code_from_string(std::string_view text);

struct Violation {
  std::string field;  // field/column name, or "$envelope"
  ViolationCode code = ViolationCode::type_mismatch;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::string subject_id;
  std::vector<Violation> violations;

  bool valid() const { return violations.empty(); }
  std::string outcome() const { return valid() ? "valid" : "invalid"; }

  Json to_json() const;
  static ValidationReport from_json(const Json& doc);
  bool operator==(const ValidationReport&) const = default;
};

// Validates a record payload (JSON object: field name -> value) against a
// CIDE schema. Collects every violation rather than stopping at the
// first; violations are ordered by (field name, code). Pure.
//
// Value semantics per kind:
//   - a JSON null counts as an absent value
//   - integer accepts only integral JSON numbers; float accepts any number
//   - timestamp accepts RFC 3339 UTC strings ('Z' offset)
//   - enum values must be strings drawn from the declared list
//   - blob_ref values must be non-empty strings
ValidationReport validate_record(const Json& payload, const CideSchema& schema,
                                 std::string subject_id = "");

// Validates tabular CODE output: per-row field checks plus per-column
// vocabulary binding checks (existence, accepted status, kind/unit
// equality with the bound term).
ValidationReport validate_output(const Table& rows, const CodeSchema& schema,
                                 const VocabularyRegistry& registry,
                                 std::string subject_id = "");

// Typed view of a CSV-parsed table (string cells) against a CODE schema:
// integer/float/boolean cells parse to their JSON kinds; cells that do
// not parse, and columns the schema does not declare, stay strings so
// validation can flag them.
Table coerce_csv_table(const Table& raw, const CodeSchema& schema);

}  // namespace fabric::model
