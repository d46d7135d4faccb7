#pragma once

#include <string>
#include <vector>

#include "fabric/model/catalog.hpp"
#include "fabric/model/vocabulary.hpp"

namespace fabric::sim {

// The reference study shipped with the simulator: four instrumented
// tasks feeding one published daily summary.
inline constexpr const char* kStudyId = "sleepsense";
inline constexpr const char* kSurveyTask = "sleep_survey";

// CIDE documents for the four study tasks plus the CODE document for the
// daily summary, in publish order.
std::vector<std::string> study_schema_documents();

// Term drafts the CODE schema binds, as `vocab propose` documents.
std::vector<std::string> study_vocabulary_documents();

// Publishes the study schemas and installs the accepted vocabulary terms
// the CODE schema binds. Idempotent.
void install_study_assets(model::SchemaCatalog& schemas, model::VocabularyRegistry& vocabulary);

// Pipeline document: survey rows -> daily stats -> CODE-shaped dataset.
std::string study_pipeline_document();

}  // namespace fabric::sim
