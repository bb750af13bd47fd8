// Flat-file formats: CSV tables with 9 significant digits, and dense matrices
// as CSV with a leading "#shape,<rows>,<cols>" line followed by rows.
#pragma once

#include "bsmf/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace bsmf {

/// printf("%.9g") formatting used for every CSV number.
std::string format_number(double x);

/// Parses a CSV number, accepting "nan", "inf" and "-inf". Throws InvalidArgument.
double parse_number(const std::string& field);

std::vector<std::string> split_csv_line(const std::string& line);

void write_matrix_csv(std::ostream& os, const Matrix& A);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& A);
Matrix read_matrix_csv(std::istream& is);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// A header row plus string cells, as read from a CSV file.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or -1.
  int column(const std::string& name) const;
};

CsvTable read_csv_table(std::istream& is);
CsvTable read_csv_table(const std::filesystem::path& path);

}  // namespace bsmf
