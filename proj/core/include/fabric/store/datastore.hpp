#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fabric/store/blob_store.hpp"
#include "fabric/store/metadata_index.hpp"

namespace fabric::store {

struct OutboundManifest {
  std::string environment;
  std::string dataset_id;
  std::string study_id;
  model::SchemaRef code_schema_ref;
  std::vector<std::string> entries;  // object keys of the published files
  Instant generated_at;
  std::uint64_t row_count = 0;
  std::string content_checksum;  // SHA-256 of the dataset object bytes
  std::string run_id;

  Json to_json() const;
  static OutboundManifest from_json(const Json& doc);
};

struct OutboundRequest {
  std::string environment;
  std::string dataset_id;
  std::string study_id;
  model::SchemaRef code_schema_ref;
  std::string csv;  // serialized dataset object, header row first
  Json sidecar;     // discovery metadata document
  std::uint64_t row_count = 0;
  bool code_validated = false;  // set only after validate_output passed
  std::string run_id;
  Instant generated_at;
};

// Store facade over one root directory:
//   blobs/     content-addressed objects
//   index/     metadata index (single-file database)
//   outbound/{env}/{dataset_id}/data.csv + meta.json + manifest.json
//   runs/      pipeline run records
// The manifest is written last and acts as the commit marker: a dataset
// directory without one is invisible to readers and to the audit.
class DataStore {
 public:
  explicit DataStore(std::filesystem::path root);

  BlobStore& blobs() { return blobs_; }
  const BlobStore& blobs() const { return blobs_; }
  MetadataIndex& index() { return index_; }
  const MetadataIndex& index() const { return index_; }

  BlobRef put_object(const std::string& content, const std::string& content_type,
                     const BlobKeyHint& hint);
  PutOutcome put_metadata(const MetadataEntry& entry);
  PromotionReport promote(const std::vector<std::string>& entry_ids);
  std::vector<MetadataEntry> query_metadata(const MetadataFilter& filter) const;
  std::pair<MetadataEntry, std::optional<std::string>> get_entry(const std::string& entry_id) const;

  OutboundManifest publish_outbound(const OutboundRequest& request);
  std::vector<OutboundManifest> list_outbound() const;
  std::optional<OutboundManifest> find_outbound(const std::string& environment,
                                                const std::string& dataset_id) const;
  // Dataset object bytes, integrity-checked against the manifest checksum.
  std::string read_outbound_csv(const std::string& environment,
                                const std::string& dataset_id) const;
  Json read_outbound_sidecar(const std::string& environment, const std::string& dataset_id) const;
  void mark_outbound(const std::vector<std::string>& entry_ids, const std::string& environment);

  void save_run(const std::string& run_id, const Json& run_record);
  std::optional<Json> load_run(const std::string& run_id) const;
  std::vector<Json> list_runs() const;

  // Full-scan integrity audit; empty result means the store is sound.
  std::vector<std::string> audit() const;

  // Digest of all logical store state: every metadata entry plus every
  // durable file outside index/. Stable across restarts; changes iff
  // state changes.
  std::string state_hash() const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path dataset_dir(const std::string& environment,
                                    const std::string& dataset_id) const;

  std::filesystem::path root_;
  BlobStore blobs_;
  MetadataIndex index_;
  mutable std::mutex publish_mu_;
};

}  // namespace fabric::store
