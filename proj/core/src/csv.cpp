#include "selboost/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "selboost/error.hpp"

namespace selboost {
namespace {

// Reads one logical record (quoted fields may span physical lines).
// Returns false at end of input. `line` is advanced past consumed lines.
bool read_record(std::istream& in, std::string& record, std::size_t& line) {
  record.clear();
  std::string physical;
  bool in_quotes = false;
  bool any = false;
  while (std::getline(in, physical)) {
    ++line;
    any = true;
    if (!physical.empty() && physical.back() == '\r') physical.pop_back();
    if (!record.empty() || in_quotes) record.push_back('\n');
    record += physical;
    for (char c : physical) {
      if (c == '"') in_quotes = !in_quotes;
    }
    if (!in_quotes) return true;
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line);
  return any;
}

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  // from_chars rejects a leading '+'.
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string escape_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::vector<std::string> split_csv_record(std::string_view record) {
  std::vector<std::string> fields;
  std::string current;
  bool in_quotes = false;
  for (std::size_t i = 0; i < record.size(); ++i) {
    const char c = record[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < record.size() && record[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

Dataset parse_csv(std::istream& in, const Schema& schema, std::string_view missing_token) {
  std::string record;
  std::size_t line = 0;
  if (!read_record(in, record, line)) throw ParseError("missing header row", 1);
  if (record.starts_with("\xEF\xBB\xBF")) record.erase(0, 3);
  const auto header = split_csv_record(record);
  const std::size_t n_cols = header.size();

  for (const auto& [name, kind] : schema) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw SchemaError("schema column '" + name + "' not present in header");
    }
  }

  std::vector<std::vector<std::optional<std::string>>> cells(n_cols);
  std::vector<std::vector<std::size_t>> cell_lines(n_cols);
  while (true) {
    const std::size_t start_line = line + 1;
    if (!read_record(in, record, line)) break;
    if (record.empty()) continue;
    auto fields = split_csv_record(record);
    if (fields.size() != n_cols) {
      throw ParseError("expected " + std::to_string(n_cols) + " fields, found " + std::to_string(fields.size()),
                       start_line);
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (fields[c] == missing_token) {
        cells[c].emplace_back(std::nullopt);
      } else {
        cells[c].emplace_back(std::move(fields[c]));
      }
      cell_lines[c].push_back(start_line);
    }
  }

  std::vector<Column> columns;
  columns.reserve(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    const auto it = schema.find(header[c]);
    std::optional<ColumnKind> kind;
    if (it != schema.end()) kind = it->second;

    std::vector<double> numbers;
    bool numeric_ok = !kind || *kind == ColumnKind::numeric;
    if (numeric_ok) {
      numbers.reserve(cells[c].size());
      for (std::size_t r = 0; r < cells[c].size(); ++r) {
        const auto& cell = cells[c][r];
        if (!cell) {
          numbers.push_back(std::nan(""));
          continue;
        }
        const auto v = parse_number(*cell);
        if (!v) {
          if (kind) {
            throw ParseError("column '" + header[c] + "': cannot parse '" + *cell + "' as a number", cell_lines[c][r]);
          }
          numeric_ok = false;
          break;
        }
        numbers.push_back(*v);
      }
    }
    if (numeric_ok) {
      columns.push_back(Column::numeric(header[c], std::move(numbers)));
    } else {
      columns.push_back(Column::categorical_from_strings(header[c], cells[c]));
    }
  }
  return Dataset(std::move(columns));
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, std::string_view missing_token) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_csv(in, schema, missing_token);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string to_csv(const Dataset& ds, std::string_view missing_token) {
  std::string out;
  const auto names = ds.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c) out.push_back(',');
    out += escape_field(names[c]);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    for (std::size_t c = 0; c < ds.n_columns(); ++c) {
      if (c) out.push_back(',');
      const auto& col = ds.column(c);
      if (col.is_missing(r)) {
        out += missing_token;
      } else if (col.is_numeric()) {
        out += format_double(col.values()[r]);
      } else {
        out += escape_field(*col.level_at(r));
      }
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, std::string_view missing_token) {
  write_file_atomic(path, to_csv(ds, missing_token));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace selboost
