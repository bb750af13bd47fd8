#include "bsmf/matrix_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bsmf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string() + " for reading");
  return in;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

double parse_number(const std::string& field) {
  const std::string s = trim(field);
  if (s.empty()) throw InvalidArgument("empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_matrix_csv(std::ostream& os, const Matrix& A) {
  os << "#shape," << A.rows() << ',' << A.cols() << '\n';
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (j) os << ',';
      os << format_number(A(i, j));
    }
    os << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& A) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  write_matrix_csv(out, A);
}

Matrix read_matrix_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("matrix CSV is empty");
  const auto head = split_csv_line(line);
  if (head.size() != 3 || head[0] != "#shape") throw InvalidArgument("matrix CSV must start with '#shape,<rows>,<cols>'");
  const auto rows = static_cast<Eigen::Index>(parse_number(head[1]));
  const auto cols = static_cast<Eigen::Index>(parse_number(head[2]));
  if (rows < 1 || cols < 1) throw InvalidArgument("matrix CSV shape must be positive");
  Matrix A(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw InvalidArgument("matrix CSV has fewer rows than declared");
    const auto cells = split_csv_line(line);
    if (static_cast<Eigen::Index>(cells.size()) != cols)
      throw InvalidArgument("matrix CSV row " + std::to_string(i) + " has " + std::to_string(cells.size()) +
                            " fields, expected " + std::to_string(cols));
    for (Eigen::Index j = 0; j < cols; ++j) A(i, j) = parse_number(cells[j]);
  }
  return A;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix_csv(in);
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv_table(std::istream& is) {
  CsvTable t;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    if (t.header.empty()) {
      t.header = split_csv_line(line);
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw InvalidArgument("CSV row has " + std::to_string(cells.size()) + " fields, header has " +
                            std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_csv_table(in);
}

}  // namespace bsmf
