#include "gel/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "gel/errors.hpp"

namespace gel {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

bool parse_cell(const std::string& cell, double* out) {
  if (cell.empty()) return false;
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + cell.size()) return false;
  if (!std::isfinite(v)) return false;
  *out = v;
  return true;
}

}  // namespace

Dataset read_csv_dataset(std::istream& in, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  long expected_cols = -1;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    std::vector<double> row(cells.size());
    bool all_numeric = true;
    long bad_col = 0;
    for (size_t j = 0; j < cells.size(); ++j) {
      if (!parse_cell(cells[j], &row[j])) {
        all_numeric = false;
        bad_col = static_cast<long>(j) + 1;
        break;
      }
    }
    if (first_content_line) {
      first_content_line = false;
      if (!all_numeric) continue;  // header
    }
    if (!all_numeric) {
      throw InputError(origin + ": line " + std::to_string(lineno) +
                       ", column " + std::to_string(bad_col) +
                       ": non-numeric cell '" +
                       cells[static_cast<size_t>(bad_col - 1)] + "'");
    }
    if (expected_cols < 0) {
      expected_cols = static_cast<long>(row.size());
    } else if (static_cast<long>(row.size()) != expected_cols) {
      throw InputError(origin + ": line " + std::to_string(lineno) +
                       ": expected " + std::to_string(expected_cols) +
                       " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) {
    throw InputError(origin + ": need at least 2 data rows, got " +
                     std::to_string(rows.size()));
  }
  Matrix m(rows.size(), expected_cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (long j = 0; j < expected_cols; ++j) m(i, j) = rows[i][j];
  }
  return Dataset(std::move(m));
}

Dataset read_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  return read_csv_dataset(in, path);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write to '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace gel
