#include "fabric/access/query.hpp"

#include <algorithm>
#include <map>

#include "fabric/error.hpp"

namespace fabric::access {

std::string_view to_string(Aggregate a) {
  switch (a) {
    case Aggregate::count: return "count";
    case Aggregate::mean: return "mean";
    case Aggregate::min: return "min";
    case Aggregate::max: return "max";
    case Aggregate::sum: return "sum";
  }
  return "count";
}

std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::none: return "none";
    case GroupBy::hour: return "hour";
    case GroupBy::day: return "day";
  }
  return "none";
}

std::optional<Aggregate> aggregate_from_string(std::string_view text) {
  if (text == "count") return Aggregate::count;
  if (text == "mean") return Aggregate::mean;
  if (text == "min") return Aggregate::min;
  if (text == "max") return Aggregate::max;
  if (text == "sum") return Aggregate::sum;
  return std::nullopt;
}

std::optional<GroupBy> group_by_from_string(std::string_view text) {
  if (text == "none") return GroupBy::none;
  if (text == "hour") return GroupBy::hour;
  if (text == "day") return GroupBy::day;
  return std::nullopt;
}

Json QueryRequest::to_json() const {
  return Json{{"dataset_id", dataset_id}, {"field", field},
              {"from", from.to_rfc3339()}, {"to", to.to_rfc3339()},
              {"group_by", std::string(to_string(group_by))},
              {"aggregate", std::string(to_string(aggregate))}};
}

QueryRequest QueryRequest::from_json(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::parse_error, "query must be an object");
  QueryRequest req;
  try {
    req.dataset_id = doc.at("dataset_id").get<std::string>();
    req.field = doc.at("field").get<std::string>();
    auto from = parse_rfc3339(doc.at("from").get<std::string>());
    auto to = parse_rfc3339(doc.at("to").get<std::string>());
    if (!from || !to) {
      throw Error(ErrorCode::bad_range, "from/to must be RFC 3339 UTC timestamps");
    }
    req.from = *from;
    req.to = *to;
    if (doc.contains("group_by")) {
      auto g = group_by_from_string(doc.at("group_by").get<std::string>());
      if (!g) throw Error(ErrorCode::parse_error, "group_by must be none, hour, or day");
      req.group_by = *g;
    }
    auto agg = aggregate_from_string(doc.at("aggregate").get<std::string>());
    if (!agg) {
      throw Error(ErrorCode::parse_error, "aggregate must be count, mean, min, max, or sum");
    }
    req.aggregate = *agg;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("bad query: ") + e.what());
  }
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "dataset_id" && key != "field" && key != "from" && key != "to" &&
        key != "group_by" && key != "aggregate") {
      throw Error(ErrorCode::parse_error, "unknown query key '" + key + "'");
    }
  }
  if (req.from > req.to) throw Error(ErrorCode::bad_range, "from must not exceed to");
  return req;
}

Json QuerySeries::to_json() const {
  Json points_json = Json::array();
  for (const auto& [bucket, value] : points) {
    points_json.push_back({{"bucket_start", bucket.to_rfc3339()}, {"value", value}});
  }
  return Json{{"dataset_id", dataset_id},
              {"field", field},
              {"row_count", row_count},
              {"points", std::move(points_json)}};
}

Json DatasetInfo::to_json() const {
  Json doc{{"dataset_id", dataset_id},
           {"code_schema_ref", code_schema_ref.to_json()},
           {"row_count", row_count}};
  doc["coverage"] = coverage ? Json{{"from", coverage->first.to_rfc3339()},
                                    {"to", coverage->second.to_rfc3339()}}
                             : Json(nullptr);
  return doc;
}

DatasetCatalog::DatasetCatalog(const store::DataStore& store,
                               const model::SchemaCatalog& schemas)
    : store_(store), schemas_(schemas) {}

std::vector<DatasetInfo> DatasetCatalog::list_datasets(const AccessToken& token) const {
  std::vector<DatasetInfo> out;
  for (const auto& manifest : store_.list_outbound()) {
    if (!token.covers(manifest.environment, manifest.study_id)) continue;
    DatasetInfo info;
    info.dataset_id = manifest.dataset_id;
    info.environment = manifest.environment;
    info.code_schema_ref = manifest.code_schema_ref;
    info.row_count = manifest.row_count;
    const Json sidecar = store_.read_outbound_sidecar(manifest.environment, manifest.dataset_id);
    if (sidecar.contains("time_coverage") && !sidecar.at("time_coverage").is_null()) {
      auto from = parse_rfc3339(sidecar.at("time_coverage").at("from").get<std::string>());
      auto to = parse_rfc3339(sidecar.at("time_coverage").at("to").get<std::string>());
      if (from && to) info.coverage = {*from, *to};
    }
    out.push_back(std::move(info));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dataset_id, a.environment) < std::tie(b.dataset_id, b.environment);
  });
  return out;
}

QuerySeries DatasetCatalog::query_series(const QueryRequest& request,
                                         const AccessToken& token) const {
  if (request.from > request.to) {
    throw Error(ErrorCode::bad_range, "from must not exceed to");
  }

  // Scope filter first: datasets outside the token's scopes do not exist
  // as far as the caller can tell.
  std::optional<store::OutboundManifest> manifest;
  for (const auto& candidate : store_.list_outbound()) {
    if (candidate.dataset_id != request.dataset_id) continue;
    if (!token.covers(candidate.environment, candidate.study_id)) continue;
    if (!manifest || candidate.environment < manifest->environment) manifest = candidate;
  }
  if (!manifest) {
    throw Error(ErrorCode::unknown_dataset, "no dataset '" + request.dataset_id + "'");
  }

  auto schema = schemas_.code(manifest->code_schema_ref);
  if (!schema) {
    throw Error(ErrorCode::schema_not_found,
                "dataset references unpublished schema " + manifest->code_schema_ref.display());
  }
  const model::FieldSpec* field = schema->find_field(request.field);
  if (field == nullptr) {
    throw Error(ErrorCode::unknown_field,
                "dataset has no field '" + request.field + "'");
  }
  const bool numeric = field->kind == model::FieldKind::integer_kind ||
                       field->kind == model::FieldKind::float_kind;
  if (request.aggregate != Aggregate::count && !numeric) {
    throw Error(ErrorCode::unknown_field,
                "field '" + request.field + "' is not numeric");
  }
  const model::FieldSpec* time_field = nullptr;
  for (const auto& f : schema->fields) {
    if (f.kind == model::FieldKind::timestamp_kind) {
      time_field = &f;
      break;
    }
  }
  if (time_field == nullptr) {
    throw Error(ErrorCode::unknown_field, "dataset has no timestamp field");
  }

  const Table table =
      from_csv(store_.read_outbound_csv(manifest->environment, manifest->dataset_id));
  auto time_col = table.column_index(time_field->name);
  auto value_col = table.column_index(request.field);
  if (!time_col || !value_col) {
    throw Error(ErrorCode::unknown_field, "dataset object lacks a declared column");
  }

  struct Acc {
    std::uint64_t count = 0;
    std::int64_t isum = 0;
    long double fsum = 0.0L;
    std::int64_t imin = 0, imax = 0;
    double fmin = 0.0, fmax = 0.0;
  };
  const bool integer_field = field->kind == model::FieldKind::integer_kind;
  std::map<std::int64_t, Acc> buckets;
  std::uint64_t consumed = 0;

  for (std::size_t r = 0; r < table.row_count(); ++r) {
    const Json& time_cell = table.at(r, *time_col);
    if (!time_cell.is_string()) continue;
    auto t = parse_rfc3339(time_cell.get<std::string>());
    if (!t || *t < request.from || *t > request.to) continue;
    const Json& cell = table.at(r, *value_col);
    if (cell.is_null() || !cell.is_string()) continue;
    const std::string text = cell.get<std::string>();

    std::optional<std::int64_t> ivalue;
    std::optional<double> fvalue;
    if (numeric) {
      if (integer_field) {
        std::size_t used = 0;
        try {
          ivalue = std::stoll(text, &used);
        } catch (const std::exception&) {
        }
        if (used != text.size()) ivalue.reset();
        if (!ivalue) continue;
      } else {
        std::size_t used = 0;
        try {
          fvalue = std::stod(text, &used);
        } catch (const std::exception&) {
        }
        if (used != text.size()) fvalue.reset();
        if (!fvalue) continue;
      }
    }

    Instant bucket = request.from;
    if (request.group_by == GroupBy::hour) bucket = t->floor_to_hour();
    if (request.group_by == GroupBy::day) bucket = t->floor_to_day();

    Acc& acc = buckets[bucket.millis()];
    if (ivalue) {
      if (acc.count == 0 || *ivalue < acc.imin) acc.imin = *ivalue;
      if (acc.count == 0 || *ivalue > acc.imax) acc.imax = *ivalue;
      acc.isum += *ivalue;
      acc.fsum += static_cast<long double>(*ivalue);
    } else if (fvalue) {
      if (acc.count == 0 || *fvalue < acc.fmin) acc.fmin = *fvalue;
      if (acc.count == 0 || *fvalue > acc.fmax) acc.fmax = *fvalue;
      acc.fsum += *fvalue;
    }
    acc.count += 1;
    consumed += 1;
  }

  QuerySeries series;
  series.dataset_id = request.dataset_id;
  series.field = request.field;
  series.row_count = consumed;
  for (const auto& [bucket_ms, acc] : buckets) {
    Json value;
    switch (request.aggregate) {
      case Aggregate::count: value = acc.count; break;
      case Aggregate::sum:
        value = integer_field ? Json(acc.isum) : Json(static_cast<double>(acc.fsum));
        break;
      case Aggregate::min: value = integer_field ? Json(acc.imin) : Json(acc.fmin); break;
      case Aggregate::max: value = integer_field ? Json(acc.imax) : Json(acc.fmax); break;
      case Aggregate::mean:
        value = integer_field
                    ? static_cast<double>(static_cast<long double>(acc.isum) / acc.count)
                    : static_cast<double>(acc.fsum / static_cast<long double>(acc.count));
        break;
    }
    series.points.emplace_back(Instant::from_millis(bucket_ms), std::move(value));
  }
  return series;
}

}  // namespace fabric::access
