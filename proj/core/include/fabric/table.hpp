#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace fabric {

using Json = nlohmann::json;

// In-memory tabular artifact. Cells are JSON scalars (string, integer,
// float, boolean) or null for an absent value. Serialized form is UTF-8
// CSV with a header row; CSV cell text is the canonical JSON rendering of
// the scalar (strings unquoted, then CSV-escaped).
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;

  std::size_t row_count() const { return rows.size(); }
  std::optional<std::size_t> column_index(std::string_view name) const;
  const Json& at(std::size_t row, std::size_t col) const { return rows[row][col]; }
};

std::string to_csv(const Table& table);

// Cells come back as strings (or null for empty cells); typed views are
// derived where a schema is in hand.
Table from_csv(const std::string& text);

std::string csv_cell_text(const Json& value);

}  // namespace fabric
