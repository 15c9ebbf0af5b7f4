#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace vpath::csv {

struct Row {
  std::size_t line = 0; // 1-based source line
  std::vector<std::string> fields;
};

/// Header-first comma-separated table. Double-quoted fields are supported;
/// blank lines are skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Index of `name` in the header, if present.
  std::optional<std::size_t> column(std::string_view name) const;
  /// Same as column() but throws SchemaError naming the missing column.
  std::size_t require(std::string_view name) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

double parse_double(std::string_view text, std::size_t line, std::string_view what);
long long parse_int(std::string_view text, std::size_t line, std::string_view what);

/// Shortest text that parses back to exactly `value`.
std::string format_shortest(double value);
std::string format_fixed(double value, int decimals);

/// Quotes a field when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

} // namespace vpath::csv
