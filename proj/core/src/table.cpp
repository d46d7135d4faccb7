#include "fabric/table.hpp"

#include "fabric/error.hpp"

namespace fabric {
namespace {

bool needs_quoting(std::string_view text) {
  if (text.empty()) return false;
  if (text.front() == ' ' || text.back() == ' ') return true;
  return text.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_cell(std::string& out, std::string_view text) {
  if (!needs_quoting(text)) {
    out += text;
    return;
  }
  out += '"';
  for (const char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace

std::optional<std::size_t> Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return std::nullopt;
}

std::string csv_cell_text(const Json& value) {
  if (value.is_null()) return "";
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    append_cell(out, table.columns[i]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw Error(ErrorCode::invariant_error, "row width does not match header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_cell(out, csv_cell_text(row[i]));
    }
    out += '\n';
  }
  return out;
}

Table from_csv(const std::string& text) {
  Table table;
  std::vector<Json> current;
  std::string cell;
  bool in_quotes = false;
  bool cell_was_quoted = false;
  bool any_field = false;
  bool header_done = false;

  const auto end_cell = [&] {
    if (!header_done) {
      table.columns.push_back(cell);
    } else if (cell.empty() && !cell_was_quoted) {
      current.emplace_back(nullptr);
    } else {
      current.emplace_back(cell);
    }
    cell.clear();
    cell_was_quoted = false;
    any_field = true;
  };
  const auto end_row = [&] {
    if (!any_field && cell.empty()) return;  // blank trailing line
    end_cell();
    if (!header_done) {
      header_done = true;
    } else {
      if (current.size() != table.columns.size()) {
        throw Error(ErrorCode::parse_error, "csv row width mismatch");
      }
      table.rows.push_back(std::move(current));
      current = {};
    }
    any_field = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"' && cell.empty() && !cell_was_quoted) {
      in_quotes = true;
      cell_was_quoted = true;
    } else if (c == ',') {
      end_cell();
    } else if (c == '\n') {
      if (!cell.empty() || cell_was_quoted || any_field) end_row();
    } else if (c == '\r') {
      // swallowed; \r\n handled by the \n branch
    } else {
      cell += c;
    }
  }
  if (in_quotes) throw Error(ErrorCode::parse_error, "unterminated quoted csv cell");
  if (!cell.empty() || cell_was_quoted || any_field) end_row();
  return table;
}

}  // namespace fabric
