#include "fabric/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"
#include "fabric/fsutil.hpp"
#include "fabric/sim/study_assets.hpp"

namespace fabric::sim {

namespace {

constexpr std::int64_t kHour = 3600000;
constexpr std::int64_t kDay = 86400000;

const char* kLevels[] = {"still", "low", "moderate", "high"};

std::string participant_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "part-%03d", index + 1);
  return buf;
}

std::string record_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "records/rec-%05zu.json", index + 1);
  return buf;
}

gateway::Record base_record(const std::string& participant, const std::string& device,
                            const std::string& task, Instant at) {
  gateway::Record record;
  record.study_id = kStudyId;
  record.participant_id = participant;
  record.device_id = device;
  record.task_id = task;
  record.capture_time = at;
  return record;
}

// The payload field each corruption kind targets, with its declared max.
struct CorruptionTarget {
  const char* field;
  std::int64_t max;
};

CorruptionTarget target_for(const std::string& task) {
  if (task == "bed_sensor") return {"heart_rate", 200};
  if (task == "motion_sensor") return {"step_count", 100000};
  if (task == "sleep_survey") return {"sleep_minutes", 1440};
  return {"score", 100};
}

}  // namespace

Json SimConfig::to_json() const {
  return Json{{"seed", seed},
              {"participants", participants},
              {"days", days},
              {"corruption_rate", corruption_rate},
              {"start", start.to_rfc3339()},
              {"study_id", kStudyId}};
}

SimConfig SimConfig::from_json(const Json& doc) {
  SimConfig config;
  config.seed = doc.at("seed").get<std::uint64_t>();
  config.participants = doc.at("participants").get<int>();
  config.days = doc.at("days").get<int>();
  config.corruption_rate = doc.at("corruption_rate").get<double>();
  const auto start = parse_rfc3339(doc.at("start").get<std::string>());
  if (!start) throw Error(ErrorCode::parse_error, "sim config has a bad start time");
  config.start = *start;
  return config;
}

SimStream generate(const SimConfig& config) {
  if (config.participants < 1 || config.days < 1 || config.corruption_rate < 0 ||
      config.corruption_rate > 1) {
    throw Error(ErrorCode::constraint_violation, "participants/days must be positive and "
                                                 "corruption_rate within [0,1]");
  }

  SimStream stream;
  stream.config = config;
  std::mt19937_64 rng(config.seed);

  // Draw order is part of the contract: (participant, day, task, sample).
  for (int p = 0; p < config.participants; ++p) {
    const std::string participant = participant_name(p);
    for (int d = 0; d < config.days; ++d) {
      const std::int64_t day_start = config.start.millis() + d * kDay;

      for (int h = 0; h < 24; h += 2) {
        SimRecord sim;
        sim.record = base_record(participant, "mat-" + participant, "bed_sensor",
                                 Instant::from_millis(day_start + h * kHour));
        sim.record.payload = Json{
            {"heart_rate", static_cast<std::int64_t>(45 + rng() % 46)},
            {"respiration_rate", static_cast<double>(100 + rng() % 101) / 10.0},
            {"movement_index", static_cast<double>(rng() % 101) / 100.0}};
        stream.records.push_back(std::move(sim));
      }

      for (int h = 0; h < 24; ++h) {
        SimRecord sim;
        sim.record = base_record(participant, "watch-" + participant, "motion_sensor",
                                 Instant::from_millis(day_start + h * kHour + kHour / 2));
        sim.record.payload =
            Json{{"activity_level", kLevels[rng() % 4]},
                 {"step_count", static_cast<std::int64_t>(rng() % 4000)}};
        stream.records.push_back(std::move(sim));
      }

      {
        SimRecord sim;
        sim.record = base_record(participant, "phone-" + participant, "sleep_survey",
                                 Instant::from_millis(day_start + 7 * kHour + 15 * 60000));
        sim.record.payload = Json{
            {"sleep_minutes", static_cast<std::int64_t>(300 + rng() % 241)},
            {"sleep_quality", static_cast<std::int64_t>(1 + rng() % 5)},
            {"diary_note", "diary-note-" + participant + "-" +
                               Instant::from_millis(day_start).date() + "-confidential"}};
        stream.records.push_back(std::move(sim));
      }

      {
        SimRecord sim;
        sim.record = base_record(participant, "phone-" + participant, "cognitive_task",
                                 Instant::from_millis(day_start + 19 * kHour + 45 * 60000));
        std::string bytes = "RIFF";
        for (int i = 0; i < 256; ++i) bytes.push_back(static_cast<char>(rng() & 0xff));
        const std::string checksum = sha256_hex(bytes);
        sim.record.payload = Json{{"score", static_cast<std::int64_t>(rng() % 101)},
                                  {"duration_ms", static_cast<std::int64_t>(30000 + rng() % 210001)},
                                  {"audio_capture", checksum}};
        sim.record.blob = gateway::RecordBlob{std::move(bytes), "audio/wav"};
        sim.record.client_checksum = checksum;
        stream.records.push_back(std::move(sim));
      }
    }
  }

  // Corrupt round(rate * total) records, chosen by a partial Fisher-Yates
  // over the generation order so the pick is platform-stable.
  const std::size_t total = stream.records.size();
  const auto corrupt_count =
      static_cast<std::size_t>(std::llround(config.corruption_rate * static_cast<double>(total)));
  std::vector<std::size_t> indices(total);
  for (std::size_t i = 0; i < total; ++i) indices[i] = i;
  for (std::size_t i = 0; i < corrupt_count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (total - i));
    std::swap(indices[i], indices[j]);
  }
  std::vector<std::size_t> chosen(indices.begin(), indices.begin() + corrupt_count);
  std::sort(chosen.begin(), chosen.end());

  for (const auto index : chosen) {
    SimRecord& sim = stream.records[index];
    const auto target = target_for(sim.record.task_id);
    switch (rng() % 4) {
      case 0:
        sim.record.payload.erase(target.field);
        sim.corruption = "missing_required";
        break;
      case 1:
        sim.record.payload[target.field] = target.max + 1000;
        sim.corruption = "range_violation";
        break;
      case 2:
        sim.record.payload[target.field] = "corrupted";
        sim.corruption = "type_mismatch";
        break;
      default:
        sim.record.payload["unexpected_probe"] = 1;
        sim.corruption = "unknown_field";
        break;
    }
    sim.expect_valid = false;
  }

  std::stable_sort(stream.records.begin(), stream.records.end(),
                   [](const SimRecord& a, const SimRecord& b) {
                     return std::tie(a.record.capture_time, a.record.participant_id,
                                     a.record.task_id) <
                            std::tie(b.record.capture_time, b.record.participant_id,
                                     b.record.task_id);
                   });
  return stream;
}

Json SimStream::ledger() const {
  std::int64_t expected_accepted = 0;
  std::int64_t expected_rejected = 0;

  struct DayCounts {
    std::int64_t records = 0;
    std::int64_t accepted = 0;
    std::int64_t rejected = 0;
  };
  std::map<std::pair<std::string, std::string>, DayCounts> by_participant_day;

  struct SurveyDay {
    std::int64_t count = 0;
    double sum = 0;
  };
  std::map<std::string, SurveyDay> surveys;  // day bucket RFC 3339 -> stats

  Json per_record = Json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SimRecord& sim = records[i];
    (sim.expect_valid ? expected_accepted : expected_rejected) += 1;

    auto& day = by_participant_day[{sim.record.participant_id, sim.record.capture_time.date()}];
    day.records += 1;
    (sim.expect_valid ? day.accepted : day.rejected) += 1;

    if (sim.expect_valid && sim.record.task_id == kSurveyTask) {
      auto& survey = surveys[sim.record.capture_time.floor_to_day().to_rfc3339()];
      survey.count += 1;
      survey.sum += sim.record.payload.at("sleep_minutes").get<double>();
    }

    per_record.push_back(Json{{"file", record_file_name(i)},
                              {"expect_valid", sim.expect_valid},
                              {"corruption", sim.corruption}});
  }

  Json participant_days = Json::array();
  for (const auto& [key, counts] : by_participant_day) {
    participant_days.push_back(Json{{"participant_id", key.first},
                                    {"date", key.second},
                                    {"records", counts.records},
                                    {"expected_accepted", counts.accepted},
                                    {"expected_rejected", counts.rejected}});
  }

  // Expected rows of the published daily summary, in day order.
  Json cohort_daily = Json::array();
  for (const auto& [bucket, survey] : surveys) {
    cohort_daily.push_back(Json{{"day", bucket},
                                {"record_count", survey.count},
                                {"sleep_minutes_mean",
                                 survey.sum / static_cast<double>(survey.count)}});
  }

  return Json{{"config", config.to_json()},
              {"totals", Json{{"records", records.size()},
                              {"expected_accepted", expected_accepted},
                              {"expected_rejected", expected_rejected}}},
              {"per_participant_day", std::move(participant_days)},
              {"cohort_daily", std::move(cohort_daily)},
              {"per_record", std::move(per_record)}};
}

void write_stream(const SimStream& stream, const std::filesystem::path& dir) {
  ensure_dir(dir / "records");
  Json manifest_entries = Json::array();
  for (std::size_t i = 0; i < stream.records.size(); ++i) {
    write_file_atomic(dir / record_file_name(i), stream.records[i].record.to_json().dump(2) + "\n");
    manifest_entries.push_back(Json{{"record_file", record_file_name(i)}});
  }
  write_file_atomic(dir / "batch.json", Json{{"entries", manifest_entries}}.dump(2) + "\n");
  write_file_atomic(dir / "ledger.json", stream.ledger().dump(2) + "\n");

  // Companion documents so an operator can stand up the study from the
  // stream directory alone: schemas to publish, terms to propose, and the
  // summary pipeline.
  ensure_dir(dir / "schemas");
  for (const auto& document : study_schema_documents()) {
    const auto doc = Json::parse(document);
    const auto name = doc.at("schema_id").get<std::string>() + "@v" +
                      std::to_string(doc.at("version").get<int>()) + ".json";
    write_file_atomic(dir / "schemas" / name, document);
  }
  ensure_dir(dir / "vocabulary");
  for (const auto& document : study_vocabulary_documents()) {
    const auto doc = Json::parse(document);
    write_file_atomic(dir / "vocabulary" / (doc.at("canonical_name").get<std::string>() + ".json"),
                      document);
  }
  write_file_atomic(dir / "pipeline.json", study_pipeline_document());
}

SimStream read_stream(const std::filesystem::path& dir) {
  Json ledger;
  try {
    ledger = Json::parse(read_file(dir / "ledger.json"));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("ledger.json: ") + e.what());
  }

  SimStream stream;
  stream.config = SimConfig::from_json(ledger.at("config"));
  for (const auto& item : ledger.at("per_record")) {
    SimRecord sim;
    sim.expect_valid = item.at("expect_valid").get<bool>();
    sim.corruption = item.at("corruption").get<std::string>();
    Json doc;
    try {
      doc = Json::parse(read_file(dir / item.at("file").get<std::string>()));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::parse_error, "record file: " + std::string(e.what()));
    }
    sim.record = gateway::parse_record(doc);
    stream.records.push_back(std::move(sim));
  }
  return stream;
}

}  // namespace fabric::sim
