#include "fabric/store/blob_store.hpp"

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"
#include "fabric/fsutil.hpp"

namespace fabric::store {

namespace fs = std::filesystem;

Json BlobRef::to_json() const {
  return Json{{"object_key", object_key},
              {"size_bytes", size_bytes},
              {"checksum", checksum},
              {"content_type", content_type}};
}

BlobRef BlobRef::from_json(const Json& doc) {
  BlobRef ref;
  ref.object_key = doc.at("object_key").get<std::string>();
  ref.size_bytes = doc.at("size_bytes").get<std::uint64_t>();
  ref.checksum = doc.at("checksum").get<std::string>();
  ref.content_type = doc.at("content_type").get<std::string>();
  return ref;
}

std::string extension_for_content_type(const std::string& content_type) {
  if (content_type == "text/csv") return "csv";
  if (content_type == "application/json") return "json";
  if (content_type == "text/plain") return "txt";
  if (content_type == "audio/wav" || content_type == "audio/x-wav") return "wav";
  if (content_type == "audio/mpeg") return "mp3";
  if (content_type == "video/mp4") return "mp4";
  return "bin";
}

BlobStore::BlobStore(fs::path root) : root_(std::move(root)) { ensure_dir(root_); }

fs::path BlobStore::object_path(const std::string& checksum) const {
  return root_ / checksum.substr(0, 2) / checksum;
}

BlobRef BlobStore::put(const std::string& content, const std::string& content_type,
                       const BlobKeyHint& hint) {
  if (content.empty()) {
    throw Error(ErrorCode::constraint_violation, "blob content must be non-empty");
  }
  const std::string checksum = sha256_hex(content);
  const fs::path path = object_path(checksum);
  if (!fs::exists(path)) {
    // First writer wins; a concurrent identical write lands on the same
    // content at the same key.
    write_file_atomic(path, content);
  }
  BlobRef ref;
  ref.checksum = checksum;
  ref.size_bytes = content.size();
  ref.content_type = content_type;
  ref.object_key = "study/" + hint.study_id + "/" + hint.participant_id + "/" + hint.task_id +
                   "/" + hint.date + "/" + checksum + "." +
                   extension_for_content_type(content_type);
  return ref;
}

std::string BlobStore::read(const BlobRef& ref) const { return read_by_checksum(ref.checksum); }

std::string BlobStore::read_by_checksum(const std::string& checksum) const {
  const fs::path path = object_path(checksum);
  if (!fs::exists(path)) {
    throw Error(ErrorCode::not_found, "no object with checksum " + checksum);
  }
  std::string content = read_file(path);
  if (sha256_hex(content) != checksum) {
    throw Error(ErrorCode::checksum_mismatch, "stored object " + checksum + " is corrupt");
  }
  return content;
}

bool BlobStore::contains(const std::string& checksum) const {
  return fs::exists(object_path(checksum));
}

std::size_t BlobStore::object_count() const { return list_files_recursive(root_).size(); }

std::vector<std::string> BlobStore::audit() const {
  std::vector<std::string> violations;
  for (const auto& rel : list_files_recursive(root_)) {
    const std::string expected = rel.filename().string();
    const std::string actual = sha256_hex(read_file(root_ / rel));
    if (actual != expected) {
      violations.push_back("blob " + rel.string() + ": checksum " + actual +
                           " does not match recorded " + expected);
    }
  }
  return violations;
}

}  // namespace fabric::store
