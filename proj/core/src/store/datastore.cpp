#include "fabric/store/datastore.hpp"

#include <algorithm>

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"
#include "fabric/fsutil.hpp"

namespace fabric::store {

namespace fs = std::filesystem;

Json OutboundManifest::to_json() const {
  return Json{{"environment", environment},
              {"dataset_id", dataset_id},
              {"study_id", study_id},
              {"code_schema_ref", code_schema_ref.to_json()},
              {"entries", entries},
              {"generated_at", generated_at.to_rfc3339()},
              {"row_count", row_count},
              {"content_checksum", content_checksum},
              {"run_id", run_id}};
}

OutboundManifest OutboundManifest::from_json(const Json& doc) {
  OutboundManifest m;
  try {
    m.environment = doc.at("environment").get<std::string>();
    m.dataset_id = doc.at("dataset_id").get<std::string>();
    m.study_id = doc.at("study_id").get<std::string>();
    m.code_schema_ref = model::SchemaRef::from_json(doc.at("code_schema_ref"));
    m.entries = doc.at("entries").get<std::vector<std::string>>();
    auto at = parse_rfc3339(doc.at("generated_at").get<std::string>());
    if (!at) throw Error(ErrorCode::parse_error, "manifest generated_at must be RFC 3339 UTC");
    m.generated_at = *at;
    m.row_count = doc.at("row_count").get<std::uint64_t>();
    m.content_checksum = doc.at("content_checksum").get<std::string>();
    m.run_id = doc.at("run_id").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("bad outbound manifest: ") + e.what());
  }
  return m;
}

DataStore::DataStore(fs::path root)
    : root_(std::move(root)),
      blobs_(root_ / "blobs"),
      index_(root_ / "index" / "metadata.db") {
  ensure_dir(root_ / "outbound");
  ensure_dir(root_ / "runs");
}

BlobRef DataStore::put_object(const std::string& content, const std::string& content_type,
                              const BlobKeyHint& hint) {
  return blobs_.put(content, content_type, hint);
}

PutOutcome DataStore::put_metadata(const MetadataEntry& entry) {
  if (entry.blob && !blobs_.contains(entry.blob->checksum)) {
    throw Error(ErrorCode::dangling_blob,
                "entry references absent object " + entry.blob->object_key);
  }
  return index_.put(entry);
}

PromotionReport DataStore::promote(const std::vector<std::string>& entry_ids) {
  return index_.promote(entry_ids);
}

std::vector<MetadataEntry> DataStore::query_metadata(const MetadataFilter& filter) const {
  return index_.query(filter);
}

std::pair<MetadataEntry, std::optional<std::string>> DataStore::get_entry(
    const std::string& entry_id) const {
  auto entry = index_.get(entry_id);
  if (!entry) throw Error(ErrorCode::not_found, "no entry " + entry_id);
  std::optional<std::string> content;
  if (entry->blob) content = blobs_.read(*entry->blob);
  return {std::move(*entry), std::move(content)};
}

fs::path DataStore::dataset_dir(const std::string& environment,
                                const std::string& dataset_id) const {
  return root_ / "outbound" / environment / dataset_id;
}

OutboundManifest DataStore::publish_outbound(const OutboundRequest& request) {
  if (!request.code_validated) {
    throw Error(ErrorCode::code_not_validated,
                "dataset " + request.dataset_id + " has no output validation record");
  }
  const std::string checksum = sha256_hex(request.csv);
  const fs::path dir = dataset_dir(request.environment, request.dataset_id);
  const std::string key_prefix =
      "outbound/" + request.environment + "/" + request.dataset_id + "/";

  std::lock_guard<std::mutex> lock(publish_mu_);
  if (fs::exists(dir / "manifest.json")) {
    auto existing = OutboundManifest::from_json(Json::parse(read_file(dir / "manifest.json")));
    if (existing.content_checksum == checksum) return existing;
  }

  OutboundManifest manifest;
  manifest.environment = request.environment;
  manifest.dataset_id = request.dataset_id;
  manifest.study_id = request.study_id;
  manifest.code_schema_ref = request.code_schema_ref;
  manifest.entries = {key_prefix + "data.csv", key_prefix + "meta.json"};
  manifest.generated_at = request.generated_at;
  manifest.row_count = request.row_count;
  manifest.content_checksum = checksum;
  manifest.run_id = request.run_id;

  write_file_atomic(dir / "data.csv", request.csv);
  write_file_atomic(dir / "meta.json", request.sidecar.dump(2) + "\n");
  // Manifest last: readers treat its presence as the commit point.
  write_file_atomic(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

std::vector<OutboundManifest> DataStore::list_outbound() const {
  std::vector<OutboundManifest> out;
  const fs::path base = root_ / "outbound";
  if (!fs::exists(base)) return out;
  for (const auto& env_dir : fs::directory_iterator(base)) {
    if (!env_dir.is_directory()) continue;
    for (const auto& ds_dir : fs::directory_iterator(env_dir.path())) {
      if (!ds_dir.is_directory()) continue;
      const fs::path manifest = ds_dir.path() / "manifest.json";
      if (!fs::exists(manifest)) continue;  // uncommitted publish, invisible
      out.push_back(OutboundManifest::from_json(Json::parse(read_file(manifest))));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.environment, a.dataset_id) < std::tie(b.environment, b.dataset_id);
  });
  return out;
}

std::optional<OutboundManifest> DataStore::find_outbound(const std::string& environment,
                                                         const std::string& dataset_id) const {
  const fs::path manifest = dataset_dir(environment, dataset_id) / "manifest.json";
  if (!fs::exists(manifest)) return std::nullopt;
  return OutboundManifest::from_json(Json::parse(read_file(manifest)));
}

std::string DataStore::read_outbound_csv(const std::string& environment,
                                         const std::string& dataset_id) const {
  auto manifest = find_outbound(environment, dataset_id);
  if (!manifest) {
    throw Error(ErrorCode::not_found, "no published dataset " + dataset_id);
  }
  std::string csv = read_file(dataset_dir(environment, dataset_id) / "data.csv");
  if (sha256_hex(csv) != manifest->content_checksum) {
    throw Error(ErrorCode::checksum_mismatch, "dataset " + dataset_id + " does not match its manifest");
  }
  return csv;
}

Json DataStore::read_outbound_sidecar(const std::string& environment,
                                      const std::string& dataset_id) const {
  const fs::path sidecar = dataset_dir(environment, dataset_id) / "meta.json";
  if (!fs::exists(dataset_dir(environment, dataset_id) / "manifest.json") ||
      !fs::exists(sidecar)) {
    throw Error(ErrorCode::not_found, "no published dataset " + dataset_id);
  }
  return Json::parse(read_file(sidecar));
}

void DataStore::mark_outbound(const std::vector<std::string>& entry_ids,
                              const std::string& environment) {
  index_.mark_outbound(entry_ids, environment);
}

void DataStore::save_run(const std::string& run_id, const Json& run_record) {
  write_file_atomic(root_ / "runs" / (run_id + ".json"), run_record.dump(2) + "\n");
}

std::optional<Json> DataStore::load_run(const std::string& run_id) const {
  const fs::path file = root_ / "runs" / (run_id + ".json");
  if (!fs::exists(file)) return std::nullopt;
  return Json::parse(read_file(file));
}

std::vector<Json> DataStore::list_runs() const {
  std::vector<Json> out;
  for (const auto& rel : list_files_recursive(root_ / "runs")) {
    out.push_back(Json::parse(read_file(root_ / "runs" / rel)));
  }
  return out;
}

std::vector<std::string> DataStore::audit() const {
  std::vector<std::string> violations = blobs_.audit();

  for (const auto& entry : index_.all()) {
    if (entry.lifecycle == Lifecycle::production && !entry.valid()) {
      violations.push_back("entry " + entry.entry_id + ": production with outcome invalid");
    }
    if (entry.blob && !blobs_.contains(entry.blob->checksum)) {
      violations.push_back("entry " + entry.entry_id + ": dangling blob " +
                           entry.blob->object_key);
    }
  }

  for (const auto& manifest : list_outbound()) {
    const fs::path dir = dataset_dir(manifest.environment, manifest.dataset_id);
    if (!fs::exists(dir / "data.csv") || !fs::exists(dir / "meta.json")) {
      violations.push_back("dataset " + manifest.dataset_id + " in " + manifest.environment +
                           ": manifest lists absent objects");
      continue;
    }
    if (sha256_hex(read_file(dir / "data.csv")) != manifest.content_checksum) {
      violations.push_back("dataset " + manifest.dataset_id + " in " + manifest.environment +
                           ": content does not match manifest checksum");
    }
    // Every published dataset must trace to a successful gated run.
    const auto run = manifest.run_id.empty() ? std::optional<Json>() : load_run(manifest.run_id);
    if (!run || !run->value("succeeded", false)) {
      violations.push_back("dataset " + manifest.dataset_id + " in " + manifest.environment +
                           ": no successful run recorded for '" + manifest.run_id + "'");
    }
  }
  return violations;
}

std::string DataStore::state_hash() const {
  Sha256Stream digest;
  for (const auto& entry : index_.all()) {
    digest.update("entry\n");
    digest.update(entry.to_json().dump());
    digest.update("\n");
  }
  for (const auto& rel : list_files_recursive(root_)) {
    const std::string name = rel.generic_string();
    if (name.rfind("index/", 0) == 0) continue;  // logical view hashed above
    digest.update("file\n");
    digest.update(name);
    digest.update("\n");
    digest.update(sha256_hex(read_file(root_ / rel)));
    digest.update("\n");
  }
  return digest.hex_digest();
}

}  // namespace fabric::store
