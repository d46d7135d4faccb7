#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace fabric::store {

using Json = nlohmann::json;

struct BlobRef {
  std::string object_key;  // study/{study}/{participant}/{task}/{yyyy-mm-dd}/{checksum}.{ext}
  std::uint64_t size_bytes = 0;
  std::string checksum;  // SHA-256 lowercase hex of content
  std::string content_type;

  Json to_json() const;
  static BlobRef from_json(const Json& doc);
  bool operator==(const BlobRef&) const = default;
};

struct BlobKeyHint {
  std::string study_id;
  std::string participant_id;
  std::string task_id;
  std::string date;  // yyyy-mm-dd
};

// Immutable content-addressed object store on the local filesystem.
// Content lives at blobs/{first2-of-checksum}/{checksum}; the object key
// is a logical, human-readable alias that embeds the checksum. Identical
// content is stored exactly once regardless of key hints; writes are
// tmp+rename so readers never see partial objects.
class BlobStore {
 public:
  explicit BlobStore(std::filesystem::path root);

  BlobRef put(const std::string& content, const std::string& content_type,
              const BlobKeyHint& hint);

  // Content bytes, integrity-checked against the recorded checksum.
  std::string read(const BlobRef& ref) const;
  std::string read_by_checksum(const std::string& checksum) const;

  bool contains(const std::string& checksum) const;
  std::size_t object_count() const;

  // Recomputes every stored object's checksum; returns violation messages.
  std::vector<std::string> audit() const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path object_path(const std::string& checksum) const;
  std::filesystem::path root_;
};

std::string extension_for_content_type(const std::string& content_type);

}  // namespace fabric::store
