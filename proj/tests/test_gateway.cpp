// Ingestion front door: envelope parsing, schema-gated submits, and batch
// processing with its conservation accounting.
#include <doctest.h>

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"
#include "fabric/gateway/ingest_service.hpp"
#include "fabric/model/catalog.hpp"
#include "fabric/store/datastore.hpp"
#include "support.hpp"

using namespace fabric;
using namespace fabric::gateway;

namespace {

struct Harness {
  testsup::TempDir dir{"gw"};
  store::DataStore store{dir.path() / "store"};
  model::SchemaCatalog schemas{dir.path() / "schemas"};
  IngestService ingest{store, schemas,
                       [] { return testsup::at("2024-03-05T12:00:00Z"); }};

  Harness() { schemas.publish(testsup::wide_cide_doc()); }
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::parse_error;
}

}  // namespace

TEST_CASE("record envelope round trips through json") {
  auto record = testsup::make_record("part-001", "2024-03-01T08:00:00Z", testsup::wide_payload());
  record.blob = RecordBlob{"blob bytes", "text/plain"};
  record.client_checksum = sha256_hex("blob bytes");

  auto parsed = parse_record(record.to_json());
  CHECK(parsed.participant_id == "part-001");
  CHECK(parsed.capture_time == record.capture_time);
  CHECK(parsed.payload == record.payload);
  REQUIRE(parsed.blob.has_value());
  CHECK(parsed.blob->content == "blob bytes");
  CHECK(parsed.blob->content_type == "text/plain");
  CHECK(parsed.client_checksum == record.client_checksum);
}

TEST_CASE("envelope defects are malformed_envelope") {
  auto base = testsup::make_record("part-001", "2024-03-01T08:00:00Z", Json::object()).to_json();

  auto expect_malformed = [](Json doc) {
    try {
      parse_record(doc);
      FAIL("expected malformed_envelope for " << doc.dump());
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::malformed_envelope);
    }
  };

  SUBCASE("non-object record") { expect_malformed(Json::array()); }
  SUBCASE("missing envelope field") {
    auto doc = base;
    doc.erase("device_id");
    expect_malformed(doc);
  }
  SUBCASE("empty envelope field") {
    auto doc = base;
    doc["study_id"] = "";
    expect_malformed(doc);
  }
  SUBCASE("non-string envelope field") {
    auto doc = base;
    doc["task_id"] = 7;
    expect_malformed(doc);
  }
  SUBCASE("capture_time with an offset") {
    auto doc = base;
    doc["capture_time"] = "2024-03-01T08:00:00+02:00";
    expect_malformed(doc);
  }
  SUBCASE("payload must be an object") {
    auto doc = base;
    doc["payload"] = Json::array();
    expect_malformed(doc);
  }
  SUBCASE("unknown top-level key") {
    auto doc = base;
    doc["extra"] = 1;
    expect_malformed(doc);
  }
  SUBCASE("blob with invalid base64") {
    auto doc = base;
    doc["blob"] = Json{{"content_type", "text/plain"}, {"content_b64", "!!!"}};
    expect_malformed(doc);
  }
  SUBCASE("blob with unknown key") {
    auto doc = base;
    doc["blob"] = Json{{"content_type", "text/plain"}, {"sneaky", 1}};
    expect_malformed(doc);
  }
  SUBCASE("absent payload defaults to empty object") {
    auto doc = base;
    doc.erase("payload");
    CHECK(parse_record(doc).payload == Json::object());
  }
}

TEST_CASE("submit accepts a valid record into staging") {
  Harness h;
  auto result = h.ingest.submit(
      testsup::make_record("part-001", "2024-03-01T08:00:00Z", testsup::wide_payload()));
  CHECK(result.status == SubmitStatus::accepted);
  REQUIRE_FALSE(result.entry_id.empty());

  auto [entry, content] = h.store.get_entry(result.entry_id);
  CHECK(entry.lifecycle == store::Lifecycle::staging);
  CHECK(entry.validation.valid());
  CHECK(entry.validation.subject_id == result.entry_id);
  CHECK(entry.schema_ref.schema_id == "kitchen_sink");
  CHECK(entry.ingest_time == testsup::at("2024-03-05T12:00:00Z"));
  CHECK_FALSE(content.has_value());
}

TEST_CASE("resubmission reports duplicate without a second entry") {
  Harness h;
  auto record = testsup::make_record("part-001", "2024-03-01T08:00:00Z", testsup::wide_payload());
  auto first = h.ingest.submit(record);
  auto again = h.ingest.submit(record);
  CHECK(again.status == SubmitStatus::duplicate);
  CHECK(again.entry_id == first.entry_id);
  CHECK(h.store.query_metadata({}).size() == 1);
}

TEST_CASE("invalid payloads are staged as rejected, and resubmits deduplicate") {
  Harness h;
  auto record = testsup::make_record("part-001", "2024-03-01T08:00:00Z",
                                     Json{{"label", "way too long for this"}});
  auto result = h.ingest.submit(record);
  CHECK(result.status == SubmitStatus::rejected);
  REQUIRE_FALSE(result.validation.valid());
  // Both the length violation and the missing required count.
  CHECK(result.validation.violations.size() == 2);

  // The rejected record still leaves an audit trail in staging...
  auto [entry, _] = h.store.get_entry(result.entry_id);
  CHECK(entry.lifecycle == store::Lifecycle::staging);
  CHECK_FALSE(entry.validation.valid());

  // ...which makes an identical retry a duplicate, not a fresh rejection.
  auto again = h.ingest.submit(record);
  CHECK(again.status == SubmitStatus::duplicate);
  CHECK(again.entry_id == result.entry_id);
}

TEST_CASE("submit without a governing schema fails loudly") {
  Harness h;
  auto record = testsup::make_record("part-001", "2024-03-01T08:00:00Z", Json::object(),
                                     "unregistered_task");
  CHECK(code_of([&] { h.ingest.submit(record); }) == ErrorCode::schema_not_found);
}

TEST_CASE("blob records store content by checksum") {
  Harness h;
  auto record = testsup::make_record("part-001", "2024-03-01T08:00:00Z", testsup::wide_payload());
  record.blob = RecordBlob{"audio bytes here", "audio/wav"};
  auto result = h.ingest.submit(record);
  CHECK(result.status == SubmitStatus::accepted);

  auto [entry, content] = h.store.get_entry(result.entry_id);
  REQUIRE(entry.blob.has_value());
  CHECK(entry.blob->checksum == sha256_hex("audio bytes here"));
  CHECK(entry.blob->content_type == "audio/wav");
  CHECK(entry.blob->object_key.find("part-001") != std::string::npos);
  CHECK(content == "audio bytes here");

  SUBCASE("same envelope with different blob content is a new record") {
    record.blob->content = "different bytes";
    CHECK(h.ingest.submit(record).status == SubmitStatus::accepted);
  }

  SUBCASE("identical blob resubmission is a duplicate") {
    CHECK(h.ingest.submit(record).status == SubmitStatus::duplicate);
  }
}

TEST_CASE("client checksum is verified against blob content") {
  Harness h;
  auto record = testsup::make_record("part-001", "2024-03-01T08:00:00Z", testsup::wide_payload());
  record.blob = RecordBlob{"verified payload", "text/plain"};

  SUBCASE("matching checksum passes, case-insensitively") {
    std::string hex = sha256_hex("verified payload");
    for (auto& c : hex) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    record.client_checksum = hex;
    CHECK(h.ingest.submit(record).status == SubmitStatus::accepted);
  }

  SUBCASE("mismatch is rejected before anything is stored") {
    record.client_checksum = std::string(64, '0');
    CHECK(code_of([&] { h.ingest.submit(record); }) == ErrorCode::checksum_mismatch);
    CHECK(h.store.query_metadata({}).empty());
  }

  SUBCASE("checksum without a blob is malformed") {
    record.blob.reset();
    record.client_checksum = std::string(64, '0');
    CHECK(code_of([&] { h.ingest.submit(record); }) == ErrorCode::malformed_envelope);
  }

  SUBCASE("blob declared with no content is malformed") {
    record.blob = RecordBlob{"", "text/plain"};
    record.client_checksum.reset();
    CHECK(code_of([&] { h.ingest.submit(record); }) == ErrorCode::malformed_envelope);
  }
}

namespace {

std::string record_bytes(const std::string& participant, const char* when, Json payload,
                         const std::string& task = "sink_task") {
  return testsup::make_record(participant, when, std::move(payload), task).to_json().dump();
}

std::string manifest_for(const std::vector<std::string>& record_files) {
  Json entries = Json::array();
  for (const auto& f : record_files) entries.push_back(Json{{"record_file", f}});
  return Json{{"entries", entries}}.dump();
}

}  // namespace

TEST_CASE("batch processing preserves order and conserves counts") {
  Harness h;
  // Seed one record so the batch sees a duplicate.
  h.ingest.submit(testsup::make_record("part-003", "2024-03-01T10:00:00Z",
                                       testsup::wide_payload()));

  BatchInput files;
  files["batch.json"] = manifest_for({"r/0.json", "r/1.json", "r/2.json"});
  files["r/0.json"] = record_bytes("part-001", "2024-03-01T08:00:00Z", testsup::wide_payload());
  files["r/1.json"] = record_bytes("part-002", "2024-03-01T09:00:00Z", Json{{"count", -5}});
  files["r/2.json"] = record_bytes("part-003", "2024-03-01T10:00:00Z", testsup::wide_payload());

  auto report = h.ingest.submit_batch(files);
  CHECK(report.batch_id.size() == 17);
  CHECK(report.received == 3);
  CHECK(report.accepted == 1);
  CHECK(report.rejected == 1);
  CHECK(report.duplicate == 1);
  CHECK(report.received == report.accepted + report.rejected + report.duplicate);

  REQUIRE(report.outcomes.size() == 3);
  CHECK(report.outcomes[0].index == 0);
  CHECK(report.outcomes[0].record_file == "r/0.json");
  CHECK(report.outcomes[0].status == SubmitStatus::accepted);
  CHECK(report.outcomes[1].status == SubmitStatus::rejected);
  REQUIRE(report.outcomes[1].validation.has_value());
  CHECK_FALSE(report.outcomes[1].validation->valid());
  CHECK(report.outcomes[2].status == SubmitStatus::duplicate);

  auto doc = report.to_json();
  CHECK(doc["totals"]["received"] == 3);
  CHECK(doc["outcomes"][1]["status"] == "rejected");
}

TEST_CASE("manifest defects abort the whole batch") {
  Harness h;
  auto expect_manifest_error = [&](BatchInput files) {
    CHECK(code_of([&] { h.ingest.submit_batch(files); }) == ErrorCode::malformed_manifest);
  };

  SUBCASE("no batch.json") { expect_manifest_error({{"r/0.json", "{}"}}); }
  SUBCASE("manifest is not json") { expect_manifest_error({{"batch.json", "not json"}}); }
  SUBCASE("entries missing") { expect_manifest_error({{"batch.json", "{}"}}); }
  SUBCASE("unknown manifest key") {
    expect_manifest_error({{"batch.json", R"({"entries": [], "extra": 1})"}});
  }
  SUBCASE("entry without record_file") {
    expect_manifest_error({{"batch.json", R"({"entries": [{"blob_file": "b"}]})"}});
  }
  SUBCASE("unknown entry key") {
    expect_manifest_error(
        {{"batch.json", R"({"entries": [{"record_file": "r", "note": "hi"}]})"}});
  }
}

TEST_CASE("per-record batch failures carry machine codes") {
  Harness h;

  BatchInput files;
  files["batch.json"] = Json{
      {"entries",
       Json::array({Json{{"record_file", "missing.json"}},
                    Json{{"record_file", "garbled.json"}},
                    Json{{"record_file", "bad_envelope.json"}},
                    Json{{"record_file", "orphan_task.json"}},
                    Json{{"record_file", "with_blob.json"}, {"blob_file", "absent.bin"}},
                    Json{{"record_file", "bad_checksum.json"}, {"blob_file", "payload.bin"}},
                    Json{{"record_file", "no_blob_decl.json"}, {"blob_file", "payload.bin"}}})}}
                            .dump();
  files["garbled.json"] = "{not json";
  files["bad_envelope.json"] = R"({"study_id": "s"})";
  files["orphan_task.json"] =
      record_bytes("part-001", "2024-03-01T08:00:00Z", Json::object(), "ghost_task");
  {
    auto rec = testsup::make_record("part-001", "2024-03-01T08:00:00Z", testsup::wide_payload());
    rec.blob = RecordBlob{"", "text/plain"};
    files["with_blob.json"] = rec.to_json().dump();
    rec.client_checksum = std::string(64, 'a');
    files["bad_checksum.json"] = rec.to_json().dump();
  }
  files["no_blob_decl.json"] =
      record_bytes("part-002", "2024-03-01T09:00:00Z", testsup::wide_payload());
  files["payload.bin"] = "actual blob bytes";

  auto report = h.ingest.submit_batch(files);
  CHECK(report.received == 7);
  CHECK(report.rejected == 7);
  CHECK(report.accepted == 0);

  REQUIRE(report.outcomes.size() == 7);
  CHECK(report.outcomes[0].error == "MISSING_FILE");
  CHECK(report.outcomes[1].error == "MALFORMED_ENVELOPE");
  CHECK(report.outcomes[2].error == "MALFORMED_ENVELOPE");
  CHECK(report.outcomes[3].error == "SCHEMA_NOT_FOUND");
  CHECK(report.outcomes[4].error == "MISSING_FILE");
  CHECK(report.outcomes[5].error == "CHECKSUM_MISMATCH");
  CHECK(report.outcomes[6].error == "MALFORMED_ENVELOPE");

  // None of the failures reached the store.
  CHECK(h.store.query_metadata({}).empty());
}

TEST_CASE("batch blob files are attached to their records") {
  Harness h;
  auto rec = testsup::make_record("part-001", "2024-03-01T08:00:00Z", testsup::wide_payload());
  rec.blob = RecordBlob{"", "audio/wav"};

  BatchInput files;
  files["batch.json"] =
      Json{{"entries", Json::array({Json{{"record_file", "r.json"},
                                         {"blob_file", "audio/take1.wav"}}})}}
          .dump();
  files["r.json"] = rec.to_json().dump();
  files["audio/take1.wav"] = "RIFF....fake wave data";

  auto report = h.ingest.submit_batch(files);
  REQUIRE(report.accepted == 1);
  auto [entry, content] = h.store.get_entry(report.outcomes[0].entry_id);
  CHECK(content == "RIFF....fake wave data");
  CHECK(entry.blob->checksum == sha256_hex("RIFF....fake wave data"));
}

TEST_CASE("batch authorization rejects without storing") {
  Harness h;
  BatchInput files;
  files["batch.json"] = manifest_for({"a.json", "b.json"});
  files["a.json"] = record_bytes("part-001", "2024-03-01T08:00:00Z", testsup::wide_payload());
  files["b.json"] = testsup::make_record("part-002", "2024-03-01T09:00:00Z",
                                         testsup::wide_payload(), "sink_task", "otherstudy")
                        .to_json()
                        .dump();

  auto report = h.ingest.submit_batch(
      files, [](const Record& r) { return r.study_id == "teststudy"; });
  CHECK(report.accepted == 1);
  CHECK(report.rejected == 1);
  CHECK(report.outcomes[1].error == "UNAUTHORIZED");
  CHECK(h.store.query_metadata({}).size() == 1);
}
