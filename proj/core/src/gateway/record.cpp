#include "fabric/gateway/record.hpp"

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"

namespace fabric::gateway {

Json Record::to_json() const {
  Json doc{{"study_id", study_id},
           {"participant_id", participant_id},
           {"device_id", device_id},
           {"task_id", task_id},
           {"capture_time", capture_time.to_rfc3339()},
           {"payload", payload}};
  if (blob) {
    doc["blob"] = Json{{"content_type", blob->content_type},
                       {"content_b64", base64_encode(blob->content)}};
  }
  if (client_checksum) doc["client_checksum"] = *client_checksum;
  return doc;
}

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::malformed_envelope, what);
}

std::string required_string(const Json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_string()) {
    malformed(std::string(key) + " must be a string");
  }
  std::string value = doc.at(key).get<std::string>();
  if (value.empty()) malformed(std::string(key) + " must be non-empty");
  return value;
}

}  // namespace

Record parse_record(const Json& doc) {
  if (!doc.is_object()) malformed("record must be an object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "study_id" && key != "participant_id" && key != "device_id" &&
        key != "task_id" && key != "capture_time" && key != "payload" && key != "blob" &&
        key != "client_checksum") {
      malformed("unknown record key '" + key + "'");
    }
  }
  Record record;
  record.study_id = required_string(doc, "study_id");
  record.participant_id = required_string(doc, "participant_id");
  record.device_id = required_string(doc, "device_id");
  record.task_id = required_string(doc, "task_id");
  auto capture = parse_rfc3339(required_string(doc, "capture_time"));
  if (!capture) malformed("capture_time must be an RFC 3339 UTC timestamp");
  record.capture_time = *capture;

  if (doc.contains("payload")) {
    if (!doc.at("payload").is_object()) malformed("payload must be an object");
    record.payload = doc.at("payload");
  }

  if (doc.contains("blob") && !doc.at("blob").is_null()) {
    const Json& blob = doc.at("blob");
    if (!blob.is_object()) malformed("blob must be an object");
    RecordBlob parsed;
    parsed.content_type = required_string(blob, "content_type");
    if (blob.contains("content_b64")) {
      if (!blob.at("content_b64").is_string()) malformed("blob content_b64 must be a string");
      auto bytes = base64_decode(blob.at("content_b64").get<std::string>());
      if (!bytes) malformed("blob content_b64 is not valid base64");
      parsed.content = std::move(*bytes);
    }
    for (const auto& [key, value] : blob.items()) {
      (void)value;
      if (key != "content_type" && key != "content_b64") {
        malformed("unknown blob key '" + key + "'");
      }
    }
    record.blob = std::move(parsed);
  }

  if (doc.contains("client_checksum")) {
    if (!doc.at("client_checksum").is_string()) malformed("client_checksum must be a string");
    record.client_checksum = doc.at("client_checksum").get<std::string>();
  }
  return record;
}

}  // namespace fabric::gateway
