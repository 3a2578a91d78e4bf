#include "modelsearch/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "modelsearch/error.hpp"

namespace modelsearch::csv {

namespace {

std::string where(const std::filesystem::path& source, std::size_t line) {
  std::string s = source.empty() ? std::string("<memory>") : source.string();
  return s + ":" + std::to_string(line);
}

bool needs_quotes(const std::string& field) {
  return field.find_first_of(",\"\n\r") != std::string::npos;
}

}  // namespace

Table parse(std::string_view text, const std::filesystem::path& source) {
  Table table;
  table.source = source;
  std::vector<Row> records;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_record = [&] {
    if (field_started || !row.empty()) {
      row.push_back(std::move(field));
      records.push_back(std::move(row));
    }
    row.clear();
    field.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) fail(ErrorCode::FormatError, where(source, line) + ": stray quote");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) fail(ErrorCode::FormatError, where(source, line) + ": unterminated quote");
  end_record();

  if (records.empty()) fail(ErrorCode::FormatError, where(source, 1) + ": missing header");
  // Strip a UTF-8 BOM on the first field.
  if (auto& first = records.front().front(); first.rfind("\xEF\xBB\xBF", 0) == 0) first.erase(0, 3);
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

void require_header(const Table& table, const std::vector<std::string>& expected) {
  if (table.header != expected) {
    fail(ErrorCode::FormatError,
         table.source.string() + ": expected header '" + join(expected) + "', got '" + join(table.header) + "'");
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != expected.size()) {
      fail(ErrorCode::FormatError, where(table.source, i + 2) + ": expected " + std::to_string(expected.size()) +
                                       " fields, got " + std::to_string(table.rows[i].size()));
    }
  }
}

std::string join(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    if (needs_quotes(row[i])) {
      out.push_back('"');
      for (char c : row[i]) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    } else {
      out += row[i];
    }
  }
  return out;
}

void write(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows) {
  std::string text = join(header) + "\n";
  for (const auto& r : rows) text += join(r) + "\n";

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

double parse_double(std::string_view field, std::string_view context) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    fail(ErrorCode::FormatError, std::string(context) + ": not a number: '" + std::string(field) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view field, std::string_view context) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    fail(ErrorCode::FormatError, std::string(context) + ": not an integer: '" + std::string(field) + "'");
  }
  return value;
}

std::optional<double> parse_optional_double(std::string_view field, std::string_view context) {
  if (field.empty()) return std::nullopt;
  return parse_double(field, context);
}

std::optional<std::int64_t> parse_optional_int(std::string_view field, std::string_view context) {
  if (field.empty()) return std::nullopt;
  return parse_int(field, context);
}

std::string format6(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 6);
  if (ec != std::errc{}) fail(ErrorCode::NumericError, "cannot format value");
  std::string s(buf, ptr);
  if (s == "-0.000000") s.erase(0, 1);
  return s;
}

double round6(double value) {
  const std::string s = format6(value);
  double out = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

}  // namespace modelsearch::csv
