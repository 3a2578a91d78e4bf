#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace modelsearch::csv {

using Row = std::vector<std::string>;

/// A parsed CSV file: the header row plus data rows. Quoted fields follow
/// RFC 4180 (doubled quotes inside quotes); blank lines are skipped.
struct Table {
  Row header;
  std::vector<Row> rows;
  std::filesystem::path source;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, const std::filesystem::path& source = {});

/// Throws FormatError unless the header matches `expected` exactly and every
/// row has the same number of fields.
void require_header(const Table& table, const std::vector<std::string>& expected);

std::string join(const Row& row);

/// Writes header + rows with LF line endings, atomically (temp file + rename).
void write(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows);

// Numeric fields. All parsing errors are FormatError naming the location.
double parse_double(std::string_view field, std::string_view context);
std::int64_t parse_int(std::string_view field, std::string_view context);
std::optional<double> parse_optional_double(std::string_view field, std::string_view context);
std::optional<std::int64_t> parse_optional_int(std::string_view field, std::string_view context);

/// Fixed 6-decimal rendering. std::to_chars rounds the exact binary value to
/// nearest, ties to even.
std::string format6(double value);

/// Rounds to the 6-decimal grid used by every CSV the toolkit writes, so that
/// values held in memory equal what a save/load cycle yields.
double round6(double value);

}  // namespace modelsearch::csv
