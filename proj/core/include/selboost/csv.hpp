#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>

#include "selboost/dataset.hpp"

namespace selboost {

/// Declared kinds for some or all columns. Columns not listed are inferred:
/// numeric when every non-missing cell parses as a number, categorical otherwise.
using Schema = std::map<std::string, ColumnKind, std::less<>>;

/// Reads a comma-separated file with a header row. Cells equal to
/// `missing_token` are missing; row ids are 0..n-1 in file order.
/// Throws ParseError (with line number) on wrong arity or an unparseable
/// numeric cell, SchemaError when the schema names a column absent from the header.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema = {}, std::string_view missing_token = "");
Dataset parse_csv(std::istream& in, const Schema& schema = {}, std::string_view missing_token = "");

/// Serializes every column. Numbers use the shortest round-trip form;
/// missing cells (and the explicit missing level) are written as `missing_token`.
std::string to_csv(const Dataset& ds, std::string_view missing_token = "");
void write_csv(const Dataset& ds, const std::filesystem::path& path, std::string_view missing_token = "");

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Splits one CSV record into fields (RFC 4180 quoting).
std::vector<std::string> split_csv_record(std::string_view record);

}  // namespace selboost
