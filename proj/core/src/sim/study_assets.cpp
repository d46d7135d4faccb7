#include "fabric/sim/study_assets.hpp"

#include "fabric/error.hpp"
#include "fabric/table.hpp"
#include "fabric/time.hpp"

namespace fabric::sim {

namespace {

Json field(const char* name, const char* kind, bool required, Json extra = Json::object()) {
  Json doc{{"name", name}, {"kind", kind}, {"required", required}};
  for (const auto& [key, value] : extra.items()) doc[key] = value;
  return doc;
}

Json range(double lo, double hi) { return Json{{"constraints", {{"min", lo}, {"max", hi}}}}; }

std::string bed_sensor_schema() {
  Json doc{{"schema_id", "bed_sensor_reading"},
           {"version", 1},
           {"kind", "cide"},
           {"task_id", "bed_sensor"},
           {"fields",
            Json::array({
                field("heart_rate", "integer", true,
                      Json{{"unit", "bpm"}, {"constraints", {{"min", 30}, {"max", 200}}}}),
                field("respiration_rate", "float", true,
                      Json{{"unit", "breaths_per_minute"},
                           {"constraints", {{"min", 4}, {"max", 40}}}}),
                field("movement_index", "float", true, range(0, 1)),
            })}};
  return doc.dump(2) + "\n";
}

std::string motion_sensor_schema() {
  Json doc{{"schema_id", "motion_event"},
           {"version", 1},
           {"kind", "cide"},
           {"task_id", "motion_sensor"},
           {"fields",
            Json::array({
                field("activity_level", "enum", true,
                      Json{{"constraints",
                            {{"values", Json::array({"still", "low", "moderate", "high"})}}}}),
                field("step_count", "integer", true,
                      Json{{"unit", "steps"}, {"constraints", {{"min", 0}, {"max", 100000}}}}),
            })}};
  return doc.dump(2) + "\n";
}

std::string sleep_survey_schema() {
  Json doc{{"schema_id", "sleep_survey_response"},
           {"version", 1},
           {"kind", "cide"},
           {"task_id", "sleep_survey"},
           {"fields",
            Json::array({
                field("sleep_minutes", "integer", true,
                      Json{{"unit", "minutes"}, {"constraints", {{"min", 0}, {"max", 1440}}}}),
                field("sleep_quality", "integer", true, range(1, 5)),
                field("diary_note", "string", false,
                      Json{{"sensitive", true}, {"constraints", {{"max_length", 2000}}}}),
            })}};
  return doc.dump(2) + "\n";
}

std::string cognitive_task_schema() {
  Json doc{{"schema_id", "cognitive_task_result"},
           {"version", 1},
           {"kind", "cide"},
           {"task_id", "cognitive_task"},
           {"fields",
            Json::array({
                field("score", "integer", true, range(0, 100)),
                field("duration_ms", "integer", true,
                      Json{{"unit", "milliseconds"},
                           {"constraints", {{"min", 0}, {"max", 600000}}}}),
                field("audio_capture", "blob_ref", false),
            })}};
  return doc.dump(2) + "\n";
}

std::string daily_summary_schema() {
  Json doc{{"schema_id", "sleep_daily_summary"},
           {"version", 1},
           {"kind", "code"},
           {"pipeline_id", "sleepsense_daily"},
           {"fields",
            Json::array({
                field("day", "timestamp", true),
                field("sleep_minutes_mean", "float", true, Json{{"unit", "minutes"}}),
                field("record_count", "integer", true),
            })},
           {"vocabulary_bindings",
            {{"day", "observation_day"},
             {"sleep_minutes_mean", "sleep_minutes_mean"},
             {"record_count", "record_count"}}}};
  return doc.dump(2) + "\n";
}

model::VocabularyTerm term(const char* name, const char* definition, model::FieldKind kind,
                           std::optional<std::string> unit = std::nullopt,
                           std::vector<std::string> aliases = {}) {
  model::VocabularyTerm t;
  t.canonical_name = name;
  t.definition = definition;
  t.kind = kind;
  t.unit = std::move(unit);
  t.aliases = std::move(aliases);
  t.proposed_by = "sim";
  t.proposed_at = Instant::from_millis(0);
  return t;
}

std::vector<model::VocabularyTerm> study_terms() {
  return {term("observation_day", "UTC start of the day a summary row covers",
               model::FieldKind::timestamp_kind, std::nullopt, {"day_bucket"}),
          term("sleep_minutes_mean", "Mean reported nightly sleep duration in the bucket",
               model::FieldKind::float_kind, "minutes"),
          term("record_count", "Number of records contributing to the bucket",
               model::FieldKind::integer_kind)};
}

}  // namespace

std::vector<std::string> study_schema_documents() {
  return {bed_sensor_schema(), motion_sensor_schema(), sleep_survey_schema(),
          cognitive_task_schema(), daily_summary_schema()};
}

std::vector<std::string> study_vocabulary_documents() {
  std::vector<std::string> docs;
  for (const auto& t : study_terms()) {
    Json doc{{"canonical_name", t.canonical_name},
             {"definition", t.definition},
             {"kind", model::to_string(t.kind)}};
    if (t.unit) doc["unit"] = *t.unit;
    if (!t.aliases.empty()) doc["aliases"] = t.aliases;
    docs.push_back(doc.dump(2) + "\n");
  }
  return docs;
}

void install_study_assets(model::SchemaCatalog& schemas, model::VocabularyRegistry& vocabulary) {
  for (const auto& term_spec : study_terms()) {
    const auto outcome = vocabulary.register_term(term_spec);
    if (outcome.status == model::RegisterStatus::proposed) {
      vocabulary.accept(term_spec.canonical_name, "steward");
    } else if (!vocabulary.resolve(term_spec.canonical_name) ||
               vocabulary.resolve(term_spec.canonical_name)->status !=
                   model::TermStatus::accepted) {
      throw Error(ErrorCode::conflict,
                  "vocabulary term '" + term_spec.canonical_name + "' conflicts: " +
                      outcome.message);
    }
  }
  for (const auto& document : study_schema_documents()) {
    schemas.publish(document);
  }
}

std::string study_pipeline_document() {
  Json doc{
      {"pipeline_id", "sleepsense_daily"},
      {"version", "1.0.0"},
      {"nodes",
       Json::array(
           {{{"instance_id", "survey_reader"},
             {"node", "production_table_reader@1.0.0"},
             {"parameters",
              {{"study_id", kStudyId},
               {"task_id", kSurveyTask},
               {"fields", "sleep_minutes,sleep_quality"}}}},
            {{"instance_id", "daily"},
             {"node", "daily_window_stats@1.0.0"},
             {"parameters", {{"value_field", "sleep_minutes"}, {"stats", "mean,count"}}}},
            {{"instance_id", "shape"},
             {"node", "code_formatter@1.0.0"},
             {"parameters",
              {{"select", "day,sleep_minutes_mean,sleep_minutes_count:record_count"}}}}})},
      {"edges", Json::array({{{"from", "survey_reader.rows"}, {"to", "daily.rows"}},
                             {{"from", "daily.daily"}, {"to", "shape.rows"}}})},
      {"output_binding", {{"shape.dataset", "sleep_daily_summary@v1"}}}};
  return doc.dump(2) + "\n";
}

}  // namespace fabric::sim
