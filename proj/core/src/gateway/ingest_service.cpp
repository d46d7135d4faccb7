#include "fabric/gateway/ingest_service.hpp"

#include <algorithm>
#include <cctype>

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"

namespace fabric::gateway {

std::string_view to_string(SubmitStatus status) {
  switch (status) {
    case SubmitStatus::accepted: return "accepted";
    case SubmitStatus::rejected: return "rejected";
    case SubmitStatus::duplicate: return "duplicate";
  }
  return "rejected";
}

Json SubmitResult::to_json() const {
  Json doc{{"status", std::string(to_string(status))}};
  if (!entry_id.empty()) doc["entry_id"] = entry_id;
  if (status == SubmitStatus::rejected) doc["validation"] = validation.to_json();
  return doc;
}

Json BatchOutcome::to_json() const {
  Json doc{{"index", index},
           {"record_file", record_file},
           {"status", std::string(to_string(status))}};
  if (!entry_id.empty()) doc["entry_id"] = entry_id;
  if (validation) doc["validation"] = validation->to_json();
  if (!error.empty()) doc["error"] = error;
  return doc;
}

Json BatchReport::to_json() const {
  Json outcomes_json = Json::array();
  for (const auto& outcome : outcomes) outcomes_json.push_back(outcome.to_json());
  return Json{{"batch_id", batch_id},
              {"totals",
               {{"received", received},
                {"accepted", accepted},
                {"rejected", rejected},
                {"duplicate", duplicate}}},
              {"outcomes", std::move(outcomes_json)}};
}

IngestService::IngestService(store::DataStore& store, model::SchemaCatalog& schemas,
                             std::function<Instant()> clock)
    : store_(store), schemas_(schemas), clock_(std::move(clock)) {}

SubmitResult IngestService::submit(const Record& record) {
  auto schema = schemas_.cide_for_task(record.task_id);
  if (!schema) {
    throw Error(ErrorCode::schema_not_found,
                "no published schema governs task '" + record.task_id + "'");
  }

  if (record.blob && record.blob->content.empty()) {
    throw Error(ErrorCode::malformed_envelope, "blob declared without content");
  }
  if (record.client_checksum) {
    if (!record.blob) {
      throw Error(ErrorCode::malformed_envelope, "client_checksum without a blob");
    }
    std::string expected = *record.client_checksum;
    std::transform(expected.begin(), expected.end(), expected.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (sha256_hex(record.blob->content) != expected) {
      throw Error(ErrorCode::checksum_mismatch, "client_checksum does not match blob content");
    }
  }

  store::MetadataEntry entry;
  entry.study_id = record.study_id;
  entry.participant_id = record.participant_id;
  entry.device_id = record.device_id;
  entry.task_id = record.task_id;
  entry.schema_ref = schema->ref();
  entry.capture_time = record.capture_time;
  entry.ingest_time = clock_();
  entry.inline_fields = record.payload;
  if (record.blob) {
    entry.blob = store_.put_object(
        record.blob->content, record.blob->content_type,
        {record.study_id, record.participant_id, record.task_id, record.capture_time.date()});
  }
  model::ValidationReport report = model::validate_record(
      record.payload, *schema, store::derive_entry_id(store::idempotency_key(entry)));
  entry.validation = report;

  const store::PutOutcome outcome = store_.put_metadata(entry);
  SubmitResult result;
  result.entry_id = outcome.entry_id;
  if (!outcome.created) {
    result.status = SubmitStatus::duplicate;
  } else if (report.valid()) {
    result.status = SubmitStatus::accepted;
  } else {
    result.status = SubmitStatus::rejected;
    result.validation = std::move(report);
  }
  return result;
}

SubmitResult IngestService::submit_json(const Json& record_doc) {
  return submit(parse_record(record_doc));
}

namespace {

struct ManifestEntry {
  std::string record_file;
  std::string blob_file;
};

std::vector<ManifestEntry> parse_manifest(const std::string& bytes) {
  Json doc;
  try {
    doc = Json::parse(bytes);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::malformed_manifest, std::string("batch.json: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("entries") || !doc.at("entries").is_array()) {
    throw Error(ErrorCode::malformed_manifest, "batch.json must contain an entries array");
  }
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "entries") {
      throw Error(ErrorCode::malformed_manifest, "unknown manifest key '" + key + "'");
    }
  }
  std::vector<ManifestEntry> entries;
  for (const auto& item : doc.at("entries")) {
    if (!item.is_object() || !item.contains("record_file") ||
        !item.at("record_file").is_string()) {
      throw Error(ErrorCode::malformed_manifest, "manifest entry needs a record_file string");
    }
    ManifestEntry entry;
    entry.record_file = item.at("record_file").get<std::string>();
    if (item.contains("blob_file")) {
      if (!item.at("blob_file").is_string()) {
        throw Error(ErrorCode::malformed_manifest, "blob_file must be a string");
      }
      entry.blob_file = item.at("blob_file").get<std::string>();
    }
    for (const auto& [key, value] : item.items()) {
      (void)value;
      if (key != "record_file" && key != "blob_file") {
        throw Error(ErrorCode::malformed_manifest, "unknown manifest entry key '" + key + "'");
      }
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace

BatchReport IngestService::submit_batch(const BatchInput& files,
                                        const std::function<bool(const Record&)>& authorize) {
  auto manifest_it = files.find("batch.json");
  if (manifest_it == files.end()) {
    throw Error(ErrorCode::malformed_manifest, "batch.json is missing");
  }
  const auto entries = parse_manifest(manifest_it->second);

  BatchReport report;
  report.batch_id = "b" + sha256_hex(manifest_it->second).substr(0, 16);
  report.received = entries.size();

  for (std::size_t i = 0; i < entries.size(); ++i) {
    BatchOutcome outcome;
    outcome.index = i;
    outcome.record_file = entries[i].record_file;

    auto reject_with = [&](const std::string& code, const std::string&) {
      outcome.status = SubmitStatus::rejected;
      outcome.error = code;
      report.rejected += 1;
    };

    auto record_it = files.find(entries[i].record_file);
    if (record_it == files.end()) {
      reject_with("MISSING_FILE", entries[i].record_file);
      report.outcomes.push_back(std::move(outcome));
      continue;
    }

    try {
      Json doc = Json::parse(record_it->second, nullptr, true);
      Record record = parse_record(doc);
      if (!entries[i].blob_file.empty()) {
        auto blob_it = files.find(entries[i].blob_file);
        if (blob_it == files.end()) {
          reject_with("MISSING_FILE", entries[i].blob_file);
          report.outcomes.push_back(std::move(outcome));
          continue;
        }
        if (!record.blob) {
          throw Error(ErrorCode::malformed_envelope,
                      "blob_file given but record declares no blob");
        }
        record.blob->content = blob_it->second;
      }
      if (authorize && !authorize(record)) {
        reject_with("UNAUTHORIZED", record.study_id);
        report.outcomes.push_back(std::move(outcome));
        continue;
      }
      SubmitResult result = submit(record);
      outcome.status = result.status;
      outcome.entry_id = result.entry_id;
      switch (result.status) {
        case SubmitStatus::accepted: report.accepted += 1; break;
        case SubmitStatus::duplicate: report.duplicate += 1; break;
        case SubmitStatus::rejected:
          outcome.validation = std::move(result.validation);
          report.rejected += 1;
          break;
      }
    } catch (const Json::exception& e) {
      reject_with("MALFORMED_ENVELOPE", e.what());
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::malformed_envelope:
        case ErrorCode::schema_not_found:
        case ErrorCode::checksum_mismatch:
          reject_with(std::string(to_string(e.code())), e.detail());
          break;
        default: throw;  // storage faults abort the batch
      }
    }
    report.outcomes.push_back(std::move(outcome));
  }
  return report;
}

}  // namespace fabric::gateway
