#pragma once

#include <string>
#include <vector>

namespace chargeplan {

/// Minimal quote-aware CSV table: first row is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const;           // -1 when absent
  int require_col(const std::string& name) const;   // throws when absent

  static std::vector<std::string> split_line(const std::string& line);
  static CsvTable read(const std::string& path);
};

}  // namespace chargeplan
