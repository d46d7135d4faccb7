#include "fabric/sim/replay.hpp"

#include <httplib.h>

#include <map>

#include "fabric/error.hpp"

namespace fabric::sim {

namespace {

[[noreturn]] void transport(const std::string& what) {
  throw Error(ErrorCode::transport_error, what);
}

std::string record_part_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "records/rec-%05zu.json", index + 1);
  return buf;
}

std::string blob_part_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "blobs/rec-%05zu.bin", index + 1);
  return buf;
}

ReplayTotals replay_realtime(const SimStream& stream, const ReplayOptions& options) {
  httplib::Client client(options.host, options.port);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(30, 0);
  const httplib::Headers headers = {{"Authorization", "Bearer " + options.token}};

  ReplayTotals totals;
  for (const auto& sim : stream.records) {
    const auto res = client.Post("/api/v1/records", headers,
                                 sim.record.to_json().dump(), "application/json");
    if (!res) transport("POST /api/v1/records failed: " + httplib::to_string(res.error()));
    totals.received += 1;
    switch (res->status) {
      case 201: totals.accepted += 1; break;
      case 200: totals.duplicate += 1; break;
      case 422: totals.rejected += 1; break;
      default:
        transport("POST /api/v1/records answered " + std::to_string(res->status) + ": " +
                  res->body);
    }
  }
  return totals;
}

ReplayTotals replay_batch(const SimStream& stream, const ReplayOptions& options) {
  httplib::Client client(options.host, options.port);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(60, 0);
  const httplib::Headers headers = {{"Authorization", "Bearer " + options.token}};

  // One batch per participant-day, ordered by (date, participant).
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < stream.records.size(); ++i) {
    const auto& record = stream.records[i].record;
    groups[{record.capture_time.date(), record.participant_id}].push_back(i);
  }

  ReplayTotals totals;
  for (const auto& [key, indices] : groups) {
    (void)key;
    Json entries = Json::array();
    httplib::MultipartFormDataItems parts;
    for (const auto index : indices) {
      const auto& record = stream.records[index].record;
      Json manifest_entry{{"record_file", record_part_name(index)}};
      Json doc = record.to_json();
      if (record.blob) {
        // The bytes travel as their own part; the record keeps only the
        // declaration.
        doc["blob"] = Json{{"content_type", record.blob->content_type}};
        manifest_entry["blob_file"] = blob_part_name(index);
        parts.push_back({blob_part_name(index), record.blob->content, "blob.bin",
                         "application/octet-stream"});
      }
      parts.push_back({record_part_name(index), doc.dump(), "record.json", "application/json"});
      entries.push_back(std::move(manifest_entry));
    }
    parts.push_back({"batch.json", Json{{"entries", std::move(entries)}}.dump(), "batch.json",
                     "application/json"});

    const auto res = client.Post("/api/v1/batches", headers, parts);
    if (!res) transport("POST /api/v1/batches failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      transport("POST /api/v1/batches answered " + std::to_string(res->status) + ": " +
                res->body);
    }
    Json report;
    try {
      report = Json::parse(res->body);
    } catch (const Json::exception& e) {
      transport(std::string("batch report is not JSON: ") + e.what());
    }
    const Json& batch_totals = report.at("totals");
    totals.received += batch_totals.at("received").get<std::int64_t>();
    totals.accepted += batch_totals.at("accepted").get<std::int64_t>();
    totals.rejected += batch_totals.at("rejected").get<std::int64_t>();
    totals.duplicate += batch_totals.at("duplicate").get<std::int64_t>();
  }
  return totals;
}

}  // namespace

Json ReplayTotals::to_json() const {
  return Json{{"received", received},
              {"accepted", accepted},
              {"rejected", rejected},
              {"duplicate", duplicate}};
}

ReplayTotals replay(const SimStream& stream, const ReplayOptions& options) {
  return options.mode == ReplayMode::realtime ? replay_realtime(stream, options)
                                              : replay_batch(stream, options);
}

}  // namespace fabric::sim
