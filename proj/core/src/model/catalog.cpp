#include "fabric/model/catalog.hpp"

#include <algorithm>

#include "fabric/error.hpp"
#include "fabric/fsutil.hpp"

namespace fabric::model {

namespace fs = std::filesystem;

SchemaCatalog::SchemaCatalog(fs::path dir) : dir_(std::move(dir)) {
  ensure_dir(dir_);
  load();
}

void SchemaCatalog::load() {
  for (const auto& rel : list_files_recursive(dir_)) {
    if (rel.extension() != ".json") continue;
    ParsedSchema schema = parse_schema(read_file(dir_ / rel));
    by_key_[ref_of(schema).display()] = std::move(schema);
  }
}

SchemaRef SchemaCatalog::publish(const std::string& document) {
  ParsedSchema schema = parse_schema(document);
  if (const auto* code = std::get_if<CodeSchema>(&schema)) {
    for (const auto& f : code->fields) {
      if (f.sensitive) {
        throw Error(ErrorCode::invariant_error,
                    "SENSITIVE_IN_CODE: refusing to publish code schema with sensitive field '" +
                        f.name + "'");
      }
    }
  }
  const SchemaRef ref = ref_of(schema);
  const std::string canonical = serialize_schema(schema);

  std::lock_guard lock(mutex_);
  if (const auto it = by_key_.find(ref.display()); it != by_key_.end()) {
    if (serialize_schema(it->second) == canonical) return ref;  // idempotent
    throw Error(ErrorCode::conflict,
                ref.display() + " is already published with different content; bump the version");
  }
  write_file_atomic(dir_ / (ref.display() + ".json"), canonical);
  by_key_[ref.display()] = std::move(schema);
  return ref;
}

std::optional<CideSchema> SchemaCatalog::cide(const SchemaRef& ref) const {
  std::lock_guard lock(mutex_);
  const auto it = by_key_.find(ref.display());
  if (it == by_key_.end()) return std::nullopt;
  if (const auto* schema = std::get_if<CideSchema>(&it->second)) return *schema;
  return std::nullopt;
}

std::optional<CodeSchema> SchemaCatalog::code(const SchemaRef& ref) const {
  std::lock_guard lock(mutex_);
  const auto it = by_key_.find(ref.display());
  if (it == by_key_.end()) return std::nullopt;
  if (const auto* schema = std::get_if<CodeSchema>(&it->second)) return *schema;
  return std::nullopt;
}

std::optional<CideSchema> SchemaCatalog::cide_for_task(std::string_view task_id) const {
  std::lock_guard lock(mutex_);
  std::optional<CideSchema> best;
  for (const auto& [_, schema] : by_key_) {
    const auto* cide = std::get_if<CideSchema>(&schema);
    if (!cide || cide->task_id != task_id) continue;
    if (!best || cide->version > best->version) best = *cide;
  }
  return best;
}

std::vector<SchemaRef> SchemaCatalog::list() const {
  std::lock_guard lock(mutex_);
  std::vector<SchemaRef> out;
  for (const auto& [_, schema] : by_key_) out.push_back(ref_of(schema));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fabric::model
