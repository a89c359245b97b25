#pragma once

#include <iosfwd>
#include <string>

#include "gel/dataset.hpp"

namespace gel {

// CSV with one row per time point, columns = series. A header line is
// detected (any non-numeric first-line cell) and skipped. Non-numeric or
// non-finite cells raise InputError carrying 1-based line and column.
Dataset read_csv_dataset(const std::string& path);
Dataset read_csv_dataset(std::istream& in, const std::string& origin);

// 17 significant digits; round-trips doubles exactly.
std::string format_double(double x);

// Write-to-temp then rename, so interrupted runs leave no partial file.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace gel
