#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace svea {

using CsvRow = std::vector<std::string>;

/// Quotes a field when it contains a comma, quote, CR or LF (RFC 4180).
std::string csv_escape(const std::string& field);
/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// Header plus rows; every row must have as many fields as the header.
struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;

  /// Column index by name; throws IoError when absent.
  std::size_t column(const std::string& name) const;
};

/// Streaming writer. Lines end in CRLF as RFC 4180 prescribes.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, CsvRow header);
  void write(const CsvRow& row);
  void flush() { out_.flush(); }

 private:
  std::filesystem::path path_;
  std::size_t columns_;
  std::ofstream out_;
};

std::string to_csv(const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Parses RFC 4180 text (quoted fields may span lines). Throws IoError on
/// malformed quoting or ragged rows.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace svea
