#pragma once

#include <optional>
#include <string>

#include "fabric/table.hpp"
#include "fabric/time.hpp"

namespace fabric::gateway {

struct RecordBlob {
  std::string content;
  std::string content_type;
};

// The ingestion envelope. Wire format is a JSON object with the envelope
// fields, a "payload" object, and optionally "blob" {content_type,
// content_b64} and "client_checksum". In batch mode the blob bytes may
// arrive as a separate file instead of content_b64.
struct Record {
  std::string study_id;
  std::string participant_id;
  std::string device_id;
  std::string task_id;
  Instant capture_time;
  Json payload = Json::object();
  std::optional<RecordBlob> blob;
  std::optional<std::string> client_checksum;

  Json to_json() const;  // inline blob as base64
};

// Throws Error(malformed_envelope) on any envelope defect: missing or
// empty envelope field, unparseable capture_time, non-object payload,
// unknown top-level keys, undecodable blob content.
Record parse_record(const Json& doc);

}  // namespace fabric::gateway
