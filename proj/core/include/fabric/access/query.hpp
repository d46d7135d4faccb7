#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fabric/access/token.hpp"
#include "fabric/model/catalog.hpp"
#include "fabric/store/datastore.hpp"

namespace fabric::access {

using Json = nlohmann::json;

enum class Aggregate { count, mean, min, max, sum };
enum class GroupBy { none, hour, day };

std::string_view to_string(Aggregate a);
std::string_view to_string(GroupBy g);
std::optional<Aggregate> aggregate_from_string(std::string_view text);
std::optional<GroupBy> group_by_from_string(std::string_view text);

struct QueryRequest {
  std::string dataset_id;
  std::string field;
  Instant from;
  Instant to;  // inclusive
  GroupBy group_by = GroupBy::none;
  Aggregate aggregate = Aggregate::count;

  Json to_json() const;
  // Throws Error(parse_error) on shape problems, Error(bad_range) when
  // from > to or timestamps do not parse.
  static QueryRequest from_json(const Json& doc);
};

struct QuerySeries {
  std::string dataset_id;
  std::string field;
  std::uint64_t row_count = 0;  // rows consumed (in range, field non-null)
  std::vector<std::pair<Instant, Json>> points;  // sorted by bucket start

  Json to_json() const;
};

struct DatasetInfo {
  std::string dataset_id;
  std::string environment;  // resolution detail, not serialized
  model::SchemaRef code_schema_ref;
  std::optional<std::pair<Instant, Instant>> coverage;
  std::uint64_t row_count = 0;

  Json to_json() const;
};

// Read-only view over published outbound datasets, scoped by token.
// Catalog data derives from manifests and sidecars alone; queries scan
// the dataset object itself.
class DatasetCatalog {
 public:
  DatasetCatalog(const store::DataStore& store, const model::SchemaCatalog& schemas);

  std::vector<DatasetInfo> list_datasets(const AccessToken& token) const;

  // Out-of-scope datasets are indistinguishable from absent ones
  // (UNKNOWN_DATASET either way). Buckets are UTC-aligned; with group_by
  // none the single bucket starts at request.from. Empty buckets are
  // omitted. Throws Error(unknown_dataset | unknown_field | bad_range).
  QuerySeries query_series(const QueryRequest& request, const AccessToken& token) const;

 private:
  const store::DataStore& store_;
  const model::SchemaCatalog& schemas_;
};

}  // namespace fabric::access
