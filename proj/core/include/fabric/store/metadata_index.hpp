#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fabric/model/schema.hpp"
#include "fabric/model/validation.hpp"
#include "fabric/store/blob_store.hpp"
#include "fabric/time.hpp"

namespace fabric::store {

enum class Lifecycle { staging, production };

std::string_view to_string(Lifecycle lc);
Lifecycle lifecycle_from_string(std::string_view text);

struct MetadataEntry {
  std::string entry_id;
  std::string study_id;
  std::string participant_id;
  std::string device_id;
  std::string task_id;
  model::SchemaRef schema_ref;
  Instant capture_time;
  Instant ingest_time;
  std::optional<BlobRef> blob;
  Json inline_fields = Json::object();
  Lifecycle lifecycle = Lifecycle::staging;
  std::set<std::string> outbound_envs;
  model::ValidationReport validation;

  bool valid() const { return validation.valid(); }
  Json to_json() const;
  static MetadataEntry from_json(const Json& doc);
};

// (participant_id, task_id, capture_time, blob checksum or payload hash),
// joined with a separator that cannot appear in identifiers.
std::string idempotency_key(const MetadataEntry& entry);
std::string derive_entry_id(const std::string& idem_key);

struct PutOutcome {
  std::string entry_id;
  bool created = false;
};

enum class PromoteStatus { promoted, skipped };

struct PromotionItem {
  std::string entry_id;
  PromoteStatus status = PromoteStatus::skipped;
  std::string reason;  // NOT_FOUND, NOT_VALID, ALREADY_PRODUCTION; empty when promoted
};

struct PromotionReport {
  std::vector<PromotionItem> items;
  std::size_t promoted = 0;
  std::size_t skipped = 0;
  Json to_json() const;
};

struct MetadataFilter {
  std::optional<std::string> study_id;
  std::optional<std::string> participant_id;
  std::optional<std::string> task_id;
  std::optional<Lifecycle> lifecycle;
  std::optional<Instant> from;  // inclusive
  std::optional<Instant> to;    // inclusive
};

// Single-file relational index over entry metadata, write-ahead durable.
// Writes are serialized behind one mutex; lifecycle transitions are
// single-statement and therefore atomic per entry.
class MetadataIndex {
 public:
  explicit MetadataIndex(const std::filesystem::path& db_file);
  ~MetadataIndex();

  MetadataIndex(const MetadataIndex&) = delete;
  MetadataIndex& operator=(const MetadataIndex&) = delete;

  // Inserts in lifecycle staging; a duplicate idempotency key is a pure
  // no-op that reports the original entry_id.
  PutOutcome put(const MetadataEntry& entry);

  std::optional<MetadataEntry> get(const std::string& entry_id) const;
  PromotionReport promote(const std::vector<std::string>& entry_ids);
  std::vector<MetadataEntry> query(const MetadataFilter& filter) const;
  void mark_outbound(const std::vector<std::string>& entry_ids, const std::string& environment);

  std::vector<MetadataEntry> all() const;  // ordered by entry_id
  std::size_t count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  mutable std::mutex mu_;
};

}  // namespace fabric::store
