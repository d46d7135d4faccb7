#include "fabric/pipeline/builtin_nodes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fabric/error.hpp"

namespace fabric::pipeline {

namespace {

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, sep)) {
    // trim ascii whitespace
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) continue;
    out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

[[noreturn]] void fail(const std::string& message) {
  throw Error(ErrorCode::node_failure, message);
}

std::size_t require_column(const Table& table, const std::string& name,
                           const std::string& node) {
  const auto idx = table.column_index(name);
  if (!idx) fail(node + ": input has no column '" + name + "'");
  return *idx;
}

// Numeric view of a cell: typed numbers pass through, numeric strings
// parse (tables that crossed a CSV boundary carry strings).
std::optional<double> numeric(const Json& cell) {
  if (cell.is_number()) return cell.get<double>();
  if (cell.is_string()) {
    const auto& text = cell.get_ref<const std::string&>();
    try {
      std::size_t used = 0;
      const double value = std::stod(text, &used);
      if (used == text.size() && !text.empty()) return value;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

bool cell_is_integral(const Json& cell) {
  if (cell.is_number_integer() || cell.is_number_unsigned()) return true;
  if (cell.is_string()) {
    const auto& text = cell.get_ref<const std::string&>();
    if (text.empty()) return false;
    std::size_t start = text[0] == '-' ? 1 : 0;
    if (start == text.size()) return false;
    return text.find_first_not_of("0123456789", start) == std::string::npos;
  }
  return false;
}

std::optional<Instant> time_cell(const Json& cell) {
  if (!cell.is_string()) return std::nullopt;
  return parse_rfc3339(cell.get<std::string>());
}

// One aggregation bucket over a numeric column.
struct Window {
  std::int64_t count = 0;
  double sum = 0;
  std::int64_t isum = 0;
  double min = 0;
  double max = 0;
  bool all_integral = true;

  void add(double value, bool integral) {
    if (count == 0) {
      min = max = value;
    } else {
      min = std::min(min, value);
      max = std::max(max, value);
    }
    sum += value;
    if (integral) {
      isum += static_cast<std::int64_t>(std::llround(value));
    } else {
      all_integral = false;
    }
    ++count;
  }

  Json stat(const std::string& name) const {
    if (name == "count") return count;
    if (name == "mean") return count ? Json(sum / static_cast<double>(count)) : Json();
    const bool exact = all_integral;
    if (name == "sum") return exact ? Json(isum) : Json(sum);
    if (name == "min") return exact ? Json(static_cast<std::int64_t>(std::llround(min))) : Json(min);
    if (name == "max") return exact ? Json(static_cast<std::int64_t>(std::llround(max))) : Json(max);
    fail("unknown stat '" + name + "'");
  }
};

const std::set<std::string> kStats = {"count", "mean", "sum", "min", "max"};

// Shared core of daily_window_stats and resample.
Table bucket_aggregate(const Table& input, const std::string& time_field,
                       const std::string& value_field, bool daily,
                       const std::vector<std::string>& stats,
                       const std::vector<std::string>& out_columns,
                       const std::string& node) {
  const auto time_col = require_column(input, time_field, node);
  const auto value_col = require_column(input, value_field, node);
  for (const auto& stat : stats) {
    if (!kStats.count(stat)) fail(node + ": unknown stat '" + stat + "'");
  }

  std::map<std::int64_t, Window> buckets;
  for (const auto& row : input.rows) {
    const auto at = time_cell(row[time_col]);
    if (!at) continue;
    const auto value = numeric(row[value_col]);
    if (!value) continue;
    const Instant bucket = daily ? at->floor_to_day() : at->floor_to_hour();
    buckets[bucket.millis()].add(*value, cell_is_integral(row[value_col]));
  }

  Table out;
  out.columns = out_columns;
  for (const auto& [ms, window] : buckets) {
    std::vector<Json> row;
    row.push_back(Instant::from_millis(ms).to_rfc3339());
    for (const auto& stat : stats) row.push_back(window.stat(stat));
    out.rows.push_back(std::move(row));
  }
  return out;
}

NodeManifest manifest(const std::string& node_id, std::vector<Port> inputs,
                      std::vector<Port> outputs, std::vector<ParamSpec> params) {
  NodeManifest m;
  m.node_id = node_id;
  m.version = "1.0.0";
  m.entrypoint = "builtin:" + node_id;
  m.input_ports = std::move(inputs);
  m.output_ports = std::move(outputs);
  m.parameters = std::move(params);
  return m;
}

void production_table_reader(NodeContext& ctx) {
  const std::string study_id = ctx.params.at("study_id").get<std::string>();
  const std::string task_id = ctx.params.at("task_id").get<std::string>();
  const auto fields = split_list(ctx.params.at("fields").get<std::string>(), ',');
  if (fields.empty()) fail("production_table_reader: fields list is empty");

  store::MetadataFilter filter;
  filter.study_id = study_id;
  filter.task_id = task_id;
  filter.lifecycle = store::Lifecycle::production;
  const auto entries = ctx.store->query_metadata(filter);

  Table out;
  out.columns.push_back("capture_time");
  for (const auto& field : fields) out.columns.push_back(field);
  for (const auto& entry : entries) {
    std::vector<Json> row;
    row.push_back(entry.capture_time.to_rfc3339());
    for (const auto& field : fields) {
      row.push_back(entry.inline_fields.value(field, Json()));
    }
    out.rows.push_back(std::move(row));
    ctx.consumed_entry_ids.push_back(entry.entry_id);
  }
  ctx.study_hint = study_id;
  ctx.outputs["rows"] = Artifact::make_table(std::move(out));
}

void daily_window_stats(NodeContext& ctx) {
  const std::string value_field = ctx.params.at("value_field").get<std::string>();
  const std::string time_field = ctx.params.at("time_field").get<std::string>();
  const auto stats = split_list(ctx.params.at("stats").get<std::string>(), ',');
  if (stats.empty()) fail("daily_window_stats: stats list is empty");

  std::vector<std::string> columns = {"day"};
  for (const auto& stat : stats) columns.push_back(value_field + "_" + stat);
  ctx.outputs["daily"] = Artifact::make_table(
      bucket_aggregate(ctx.inputs.at("rows").table, time_field, value_field,
                       /*daily=*/true, stats, columns, "daily_window_stats"));
}

void resample(NodeContext& ctx) {
  const std::string value_field = ctx.params.at("value_field").get<std::string>();
  const std::string time_field = ctx.params.at("time_field").get<std::string>();
  const std::string interval = ctx.params.at("interval").get<std::string>();
  const std::string agg = ctx.params.at("agg").get<std::string>();
  if (interval != "hour" && interval != "day") {
    fail("resample: interval must be hour or day");
  }

  ctx.outputs["resampled"] = Artifact::make_table(
      bucket_aggregate(ctx.inputs.at("rows").table, time_field, value_field,
                       interval == "day", {agg}, {"bucket_start", value_field}, "resample"));
}

void join_on(NodeContext& ctx) {
  const std::string key = ctx.params.at("key").get<std::string>();
  const Table& left = ctx.inputs.at("left").table;
  const Table& right = ctx.inputs.at("right").table;
  const auto left_key = require_column(left, key, "join_on");
  const auto right_key = require_column(right, key, "join_on");

  Table out;
  out.columns.push_back(key);
  std::vector<std::size_t> left_cols, right_cols;
  for (std::size_t i = 0; i < left.columns.size(); ++i) {
    if (i == left_key) continue;
    left_cols.push_back(i);
    out.columns.push_back(left.columns[i]);
  }
  const std::set<std::string> taken(out.columns.begin(), out.columns.end());
  for (std::size_t i = 0; i < right.columns.size(); ++i) {
    if (i == right_key) continue;
    right_cols.push_back(i);
    out.columns.push_back(taken.count(right.columns[i]) ? right.columns[i] + "_right"
                                                        : right.columns[i]);
  }

  std::map<std::string, std::vector<std::size_t>> by_key;
  for (std::size_t i = 0; i < right.rows.size(); ++i) {
    by_key[csv_cell_text(right.rows[i][right_key])].push_back(i);
  }
  for (const auto& lrow : left.rows) {
    const auto it = by_key.find(csv_cell_text(lrow[left_key]));
    if (it == by_key.end()) continue;
    for (const auto ri : it->second) {
      std::vector<Json> row;
      row.push_back(lrow[left_key]);
      for (const auto ci : left_cols) row.push_back(lrow[ci]);
      for (const auto ci : right_cols) row.push_back(right.rows[ri][ci]);
      out.rows.push_back(std::move(row));
    }
  }
  ctx.outputs["joined"] = Artifact::make_table(std::move(out));
}

void threshold_flags(NodeContext& ctx) {
  const std::string field = ctx.params.at("field").get<std::string>();
  const double lo = ctx.params.at("min").get<double>();
  const double hi = ctx.params.at("max").get<double>();
  const Table& input = ctx.inputs.at("rows").table;
  const auto col = require_column(input, field, "threshold_flags");

  Table out = input;
  out.columns.push_back(field + "_in_range");
  for (auto& row : out.rows) {
    const auto value = numeric(row[col]);
    row.push_back(value ? Json(*value >= lo && *value <= hi) : Json());
  }
  ctx.outputs["flagged"] = Artifact::make_table(std::move(out));
}

void code_formatter(NodeContext& ctx) {
  const auto picks = split_list(ctx.params.at("select").get<std::string>(), ',');
  if (picks.empty()) fail("code_formatter: select list is empty");
  const Table& input = ctx.inputs.at("rows").table;

  Table out;
  std::vector<std::size_t> sources;
  for (const auto& pick : picks) {
    const auto colon = pick.find(':');
    const std::string src = colon == std::string::npos ? pick : pick.substr(0, colon);
    const std::string dst = colon == std::string::npos ? pick : pick.substr(colon + 1);
    sources.push_back(require_column(input, src, "code_formatter"));
    out.columns.push_back(dst);
  }
  for (const auto& row : input.rows) {
    std::vector<Json> picked;
    for (const auto ci : sources) picked.push_back(row[ci]);
    out.rows.push_back(std::move(picked));
  }
  ctx.outputs["dataset"] = Artifact::make_table(std::move(out));
}

}  // namespace

void register_builtin_nodes(NodeRegistry& registry) {
  registry.register_node(
      manifest("production_table_reader", {}, {{"rows", PortKind::table}},
               {{"study_id", ParamKind::string_kind, std::nullopt},
                {"task_id", ParamKind::string_kind, std::nullopt},
                {"fields", ParamKind::string_kind, std::nullopt}}),
      production_table_reader);
  registry.register_node(
      manifest("daily_window_stats", {{"rows", PortKind::table}}, {{"daily", PortKind::table}},
               {{"value_field", ParamKind::string_kind, std::nullopt},
                {"time_field", ParamKind::string_kind, Json("capture_time")},
                {"stats", ParamKind::string_kind, Json("mean,count")}}),
      daily_window_stats);
  registry.register_node(
      manifest("resample", {{"rows", PortKind::table}}, {{"resampled", PortKind::table}},
               {{"value_field", ParamKind::string_kind, std::nullopt},
                {"time_field", ParamKind::string_kind, Json("capture_time")},
                {"interval", ParamKind::string_kind, Json("hour")},
                {"agg", ParamKind::string_kind, Json("mean")}}),
      resample);
  registry.register_node(
      manifest("join_on", {{"left", PortKind::table}, {"right", PortKind::table}},
               {{"joined", PortKind::table}}, {{"key", ParamKind::string_kind, std::nullopt}}),
      join_on);
  registry.register_node(
      manifest("threshold_flags", {{"rows", PortKind::table}}, {{"flagged", PortKind::table}},
               {{"field", ParamKind::string_kind, std::nullopt},
                {"min", ParamKind::float_kind, std::nullopt},
                {"max", ParamKind::float_kind, std::nullopt}}),
      threshold_flags);
  registry.register_node(
      manifest("code_formatter", {{"rows", PortKind::table}}, {{"dataset", PortKind::table}},
               {{"select", ParamKind::string_kind, std::nullopt}}),
      code_formatter);
}

}  // namespace fabric::pipeline
