#include "fabric/model/validation.hpp"

#include <algorithm>

#include "fabric/error.hpp"

namespace fabric::model {
namespace {

void check_value(const std::string& field_label, const Json& value, const FieldSpec& spec,
                 std::vector<Violation>& out) {
  const auto add = [&](ViolationCode code, std::string message) {
    out.push_back({field_label, code, std::move(message)});
  };
  switch (spec.kind) {
    case FieldKind::string_kind: {
      if (!value.is_string()) return add(ViolationCode::type_mismatch, "expected string");
      const auto& text = value.get_ref<const std::string&>();
      if (spec.constraints.max_length && text.size() > *spec.constraints.max_length) {
        add(ViolationCode::range_violation,
            "string length " + std::to_string(text.size()) + " exceeds max_length " +
                std::to_string(*spec.constraints.max_length));
      }
      return;
    }
    case FieldKind::integer_kind: {
      if (!value.is_number_integer()) {
        return add(ViolationCode::type_mismatch, "expected integer");
      }
      const double v = value.get<double>();
      if ((spec.constraints.min && v < *spec.constraints.min) ||
          (spec.constraints.max && v > *spec.constraints.max)) {
        add(ViolationCode::range_violation, "value " + value.dump() + " out of range");
      }
      return;
    }
    case FieldKind::float_kind: {
      if (!value.is_number()) return add(ViolationCode::type_mismatch, "expected number");
      const double v = value.get<double>();
      if ((spec.constraints.min && v < *spec.constraints.min) ||
          (spec.constraints.max && v > *spec.constraints.max)) {
        add(ViolationCode::range_violation, "value " + value.dump() + " out of range");
      }
      return;
    }
    case FieldKind::boolean_kind: {
      if (!value.is_boolean()) add(ViolationCode::type_mismatch, "expected boolean");
      return;
    }
    case FieldKind::timestamp_kind: {
      if (!value.is_string()) {
        return add(ViolationCode::type_mismatch, "expected RFC 3339 UTC string");
      }
      const auto t = parse_rfc3339(value.get<std::string>());
      if (!t) return add(ViolationCode::type_mismatch, "not an RFC 3339 UTC timestamp");
      if ((spec.constraints.ts_min && *t < *spec.constraints.ts_min) ||
          (spec.constraints.ts_max && *t > *spec.constraints.ts_max)) {
        add(ViolationCode::range_violation, "timestamp out of range");
      }
      return;
    }
    case FieldKind::enum_kind: {
      if (!value.is_string()) return add(ViolationCode::type_mismatch, "expected string");
      const auto& text = value.get_ref<const std::string&>();
      const auto& allowed = spec.constraints.enum_values;
      if (std::find(allowed.begin(), allowed.end(), text) == allowed.end()) {
        add(ViolationCode::enum_violation, "'" + text + "' is not an allowed value");
      }
      return;
    }
    case FieldKind::blob_ref_kind: {
      if (!value.is_string() || value.get_ref<const std::string&>().empty()) {
        add(ViolationCode::type_mismatch, "expected non-empty object key string");
      }
      return;
    }
  }
}

void sort_violations(std::vector<Violation>& violations) {
  std::stable_sort(violations.begin(), violations.end(),
                   [](const Violation& a, const Violation& b) {
                     if (a.field != b.field) return a.field < b.field;
                     return to_string(a.code) < to_string(b.code);
                   });
}

}  // namespace

std::string to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::missing_required: return "MISSING_REQUIRED";
    case ViolationCode::unknown_field: return "UNKNOWN_FIELD";
    case ViolationCode::type_mismatch: return "TYPE_MISMATCH";
    case ViolationCode::range_violation: return "RANGE_VIOLATION";
    case ViolationCode::enum_violation: return "ENUM_VIOLATION";
    case ViolationCode::unit_mismatch: return "UNIT_MISMATCH";
    case ViolationCode::sensitive_in_code: return "SENSITIVE_IN_CODE";
    case ViolationCode::unbound_vocabulary: return "UNBOUND_VOCABULARY";
    case ViolationCode::unknown_term: return "UNKNOWN_TERM";
    case ViolationCode::term_not_accepted: return "TERM_NOT_ACCEPTED";
    case ViolationCode::schema_not_found: return "SCHEMA_NOT_FOUND";
  }
  return "TYPE_MISMATCH";
}

std::optional<ViolationCode> violation_code_from_string(std::string_view text) {
  static const std::pair<std::string_view, ViolationCode> table[] = {
      {"MISSING_REQUIRED", ViolationCode::missing_required},
      {"UNKNOWN_FIELD", ViolationCode::unknown_field},
      {"TYPE_MISMATCH", ViolationCode::type_mismatch},
      {"RANGE_VIOLATION", ViolationCode::range_violation},
      {"ENUM_VIOLATION", ViolationCode::enum_violation},
      {"UNIT_MISMATCH", ViolationCode::unit_mismatch},
      {"SENSITIVE_IN_CODE", ViolationCode::sensitive_in_code},
      {"UNBOUND_VOCABULARY", ViolationCode::unbound_vocabulary},
      {"UNKNOWN_TERM", ViolationCode::unknown_term},
      {"TERM_NOT_ACCEPTED", ViolationCode::term_not_accepted},
      {"SCHEMA_NOT_FOUND", ViolationCode::schema_not_found},
  };
  for (const auto& [name, code] : table) {
    if (name == text) return code;
  }
  return std::nullopt;
}

Json ValidationReport::to_json() const {
  Json doc;
  doc["subject_id"] = subject_id;
  doc["outcome"] = outcome();
  doc["violations"] = Json::array();
  for (const auto& v : violations) {
    doc["violations"].push_back(
        Json{{"field", v.field}, {"code", to_string(v.code)}, {"message", v.message}});
  }
  return doc;
}

ValidationReport ValidationReport::from_json(const Json& doc) {
  ValidationReport report;
  report.subject_id = doc.value("subject_id", std::string());
  for (const auto& item : doc.value("violations", Json::array())) {
    const auto code = violation_code_from_string(item.at("code").get<std::string>());
    if (!code) throw Error(ErrorCode::parse_error, "unknown violation code");
    report.violations.push_back({item.at("field").get<std::string>(), *code,
                                 item.value("message", std::string())});
  }
  return report;
}

ValidationReport validate_record(const Json& payload, const CideSchema& schema,
                                 std::string subject_id) {
  ValidationReport report;
  report.subject_id = std::move(subject_id);
  if (!payload.is_object()) {
    report.violations.push_back(
        {"$envelope", ViolationCode::type_mismatch, "payload must be an object"});
    return report;
  }
  for (const auto& spec : schema.fields) {
    const auto it = payload.find(spec.name);
    const bool absent = it == payload.end() || it->is_null();
    if (absent) {
      if (spec.required) {
        report.violations.push_back(
            {spec.name, ViolationCode::missing_required, "required field is missing"});
      }
      continue;
    }
    check_value(spec.name, *it, spec, report.violations);
  }
  for (const auto& [name, _] : payload.items()) {
    if (!schema.find_field(name)) {
      report.violations.push_back(
          {name, ViolationCode::unknown_field, "field is not declared by the schema"});
    }
  }
  sort_violations(report.violations);
  return report;
}

ValidationReport validate_output(const Table& rows, const CodeSchema& schema,
                                 const VocabularyRegistry& registry, std::string subject_id) {
  ValidationReport report;
  report.subject_id = subject_id.empty() ? schema.ref().display() : std::move(subject_id);

  // Column-level vocabulary checks, one violation per offending column.
  for (const auto& spec : schema.fields) {
    const auto binding = schema.vocabulary_bindings.find(spec.name);
    if (binding == schema.vocabulary_bindings.end()) {
      report.violations.push_back(
          {spec.name, ViolationCode::unbound_vocabulary, "column has no vocabulary binding"});
      continue;
    }
    const auto term = registry.resolve(binding->second);
    if (!term) {
      report.violations.push_back({spec.name, ViolationCode::unknown_term,
                                   "term '" + binding->second + "' is not in the registry"});
      continue;
    }
    if (term->status != TermStatus::accepted) {
      report.violations.push_back({spec.name, ViolationCode::term_not_accepted,
                                   "term '" + term->canonical_name + "' is " +
                                       to_string(term->status)});
      continue;
    }
    if (term->kind != spec.kind) {
      report.violations.push_back({spec.name, ViolationCode::type_mismatch,
                                   "column kind " + to_string(spec.kind) +
                                       " does not match term kind " + to_string(term->kind)});
    }
    if (term->unit != spec.unit) {
      report.violations.push_back(
          {spec.name, ViolationCode::unit_mismatch,
           "column unit '" + spec.unit.value_or("") + "' does not match term unit '" +
               term->unit.value_or("") + "'"});
    }
    if (spec.sensitive) {
      report.violations.push_back({spec.name, ViolationCode::sensitive_in_code,
                                   "sensitive columns may not appear in CODE output"});
    }
  }

  // Unknown columns.
  for (const auto& column : rows.columns) {
    if (!schema.find_field(column)) {
      report.violations.push_back(
          {column, ViolationCode::unknown_field, "column is not declared by the schema"});
    }
  }

  // Row-level checks against each declared field.
  for (const auto& spec : schema.fields) {
    const auto col = rows.column_index(spec.name);
    if (!col) {
      if (spec.required && !rows.rows.empty()) {
        report.violations.push_back(
            {spec.name, ViolationCode::missing_required, "required column is missing"});
      }
      continue;
    }
    for (std::size_t r = 0; r < rows.rows.size(); ++r) {
      const Json& value = rows.at(r, *col);
      if (value.is_null()) {
        if (spec.required) {
          report.violations.push_back({spec.name, ViolationCode::missing_required,
                                       "row " + std::to_string(r) + ": required value missing"});
        }
        continue;
      }
      std::vector<Violation> cell;
      check_value(spec.name, value, spec, cell);
      for (auto& v : cell) {
        v.message = "row " + std::to_string(r) + ": " + v.message;
        report.violations.push_back(std::move(v));
      }
    }
  }

  sort_violations(report.violations);
  return report;
}

Table coerce_csv_table(const Table& raw, const CodeSchema& schema) {
  Table typed = raw;
  for (std::size_t c = 0; c < typed.columns.size(); ++c) {
    const FieldSpec* spec = schema.find_field(typed.columns[c]);
    if (spec == nullptr) continue;
    for (auto& row : typed.rows) {
      Json& cell = row[c];
      if (!cell.is_string()) continue;
      const auto& text = cell.get_ref<const std::string&>();
      try {
        std::size_t used = 0;
        switch (spec->kind) {
          case FieldKind::integer_kind: {
            const std::int64_t v = std::stoll(text, &used);
            if (used == text.size()) cell = v;
            break;
          }
          case FieldKind::float_kind: {
            const double v = std::stod(text, &used);
            if (used == text.size()) cell = v;
            break;
          }
          case FieldKind::boolean_kind:
            if (text == "true") cell = true;
            if (text == "false") cell = false;
            break;
          default:
            break;  // string-shaped kinds stay as they are
        }
      } catch (const std::exception&) {
        // unparseable cell stays a string for validation to flag
      }
    }
  }
  return typed;
}

}  // namespace fabric::model
