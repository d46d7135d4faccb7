#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fabric/gateway/record.hpp"
#include "fabric/model/catalog.hpp"
#include "fabric/model/validation.hpp"
#include "fabric/store/datastore.hpp"

namespace fabric::gateway {

enum class SubmitStatus { accepted, rejected, duplicate };

std::string_view to_string(SubmitStatus status);

struct SubmitResult {
  SubmitStatus status = SubmitStatus::rejected;
  std::string entry_id;
  model::ValidationReport validation;  // populated when rejected

  Json to_json() const;
};

// One processed batch entry. `error` carries the machine code when the
// record never reached validation (MISSING_FILE, MALFORMED_ENVELOPE,
// SCHEMA_NOT_FOUND, CHECKSUM_MISMATCH); such records count as rejected.
struct BatchOutcome {
  std::size_t index = 0;
  std::string record_file;
  SubmitStatus status = SubmitStatus::rejected;
  std::string entry_id;
  std::optional<model::ValidationReport> validation;
  std::string error;

  Json to_json() const;
};

struct BatchReport {
  std::string batch_id;
  std::size_t received = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t duplicate = 0;
  std::vector<BatchOutcome> outcomes;

  Json to_json() const;
};

// Batch payload: relative file path -> bytes. Must contain "batch.json",
// a manifest {"entries": [{"record_file": ..., "blob_file"?: ...}, ...]}
// processed strictly in order.
using BatchInput = std::map<std::string, std::string>;

// Schema-gated ingestion front door. Blob first, then metadata; every
// outcome (including rejections) leaves an audit trail in staging.
class IngestService {
 public:
  IngestService(store::DataStore& store, model::SchemaCatalog& schemas,
                std::function<Instant()> clock = now_utc);

  // Throws Error(schema_not_found | malformed_envelope | checksum_mismatch).
  SubmitResult submit(const Record& record);
  SubmitResult submit_json(const Json& record_doc);

  // Throws Error(malformed_manifest); per-record problems never abort.
  // `authorize` (when given) gates each parsed record; a denied record
  // counts as rejected with error UNAUTHORIZED.
  BatchReport submit_batch(const BatchInput& files,
                           const std::function<bool(const Record&)>& authorize = {});

 private:
  store::DataStore& store_;
  model::SchemaCatalog& schemas_;
  std::function<Instant()> clock_;
};

}  // namespace fabric::gateway
