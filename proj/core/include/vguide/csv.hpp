#pragma once

#include <string>
#include <vector>

namespace vguide {

/// Numeric CSV with a header row. Cells must parse as doubles.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::string& path);

/// Formats a double so that rereading reproduces the same bits ("%.17g").
/// All CSV output goes through this, which is what makes reruns of the same
/// seed byte-identical.
std::string format_double(double x);

}  // namespace vguide
