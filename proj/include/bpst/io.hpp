#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace bpst::io {

/// Numeric CSV body; the header line must match `expected_header` exactly
/// (after trimming whitespace). Throws ParseError with a 1-based line number.
std::vector<std::vector<double>> read_numeric_csv(std::istream& in,
                                                  const std::vector<std::string>& expected_header,
                                                  const std::string& source_name = "csv");

/// Header names plus numeric rows; used where column order is not fixed.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    int column(const std::string& name) const; // -1 when absent
};
CsvTable read_csv_table(std::istream& in, const std::string& source_name = "csv");

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest representation that round-trips through strtod.
std::string format_double(double v);

} // namespace bpst::io
