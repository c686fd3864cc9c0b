#include "vguide/csv.hpp"

#include <cstdio>
#include <limits>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vguide {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

static std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

static std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);

  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV file: " + path);
  for (auto& h : split_line(line)) table.header.push_back(strip(h));

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(table.header.size()) +
                               " columns, got " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      // Non-numeric cells (e.g. enum columns) read as NaN; numeric consumers
      // validate finiteness of the columns they actually use.
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        std::size_t pos = 0;
        std::string t = strip(c);
        double parsed = std::stod(t, &pos);
        if (pos == t.size()) v = parsed;
      } catch (const std::exception&) {
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace vguide
