#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fabric/model/schema.hpp"

namespace fabric::model {

// Directory-backed registry of published schemas. (schema_id, version) is
// immutable once published: re-publishing identical content is a no-op,
// publishing different content under the same ref is a conflict.
class SchemaCatalog {
 public:
  explicit SchemaCatalog(std::filesystem::path dir);

  SchemaRef publish(const std::string& document);

  std::optional<CideSchema> cide(const SchemaRef& ref) const;
  std::optional<CodeSchema> code(const SchemaRef& ref) const;

  // Highest published version of the CIDE schema governing a task.
  std::optional<CideSchema> cide_for_task(std::string_view task_id) const;

  std::vector<SchemaRef> list() const;

 private:
  void load();

  mutable std::mutex mutex_;
  std::filesystem::path dir_;
  std::map<std::string, ParsedSchema> by_key_;  // "schema_id@v<version>"
};

}  // namespace fabric::model
