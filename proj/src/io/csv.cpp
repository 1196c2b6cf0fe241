#include "svea/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "svea/errors.hpp"

namespace svea {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError("csv: no column named '" + name + "'");
}

namespace {

std::string join(const CsvRow& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += ',';
    line += csv_escape(row[i]);
  }
  return line + "\r\n";
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, CsvRow header) : path_(path), columns_(header.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << join(header);
}

void CsvWriter::write(const CsvRow& row) {
  if (row.size() != columns_)
    throw UsageError("csv row with " + std::to_string(row.size()) + " fields, header has " + std::to_string(columns_));
  out_ << join(row);
  if (!out_) throw IoError("write failed on " + path_.string());
}

std::string to_csv(const CsvTable& table) {
  std::string out = join(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw UsageError("csv row width differs from header");
    out += join(row);
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  CsvWriter w(path, table.header);
  for (const auto& row : table.rows) w.write(row);
}

CsvTable parse_csv(const std::string& text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (field_started) throw IoError("csv line " + std::to_string(line) + ": quote inside an unquoted field");
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
      ++line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw IoError("csv: unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  if (rows.empty()) throw IoError("csv: missing header row");
  CsvTable table;
  table.header = std::move(rows.front());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != table.header.size())
      throw IoError("csv row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                    " fields, header has " + std::to_string(table.header.size()));
    table.rows.push_back(std::move(rows[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace svea
