#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dcabc::csv {

/// Numeric CSV with a single header line.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column, or -1.
  int column(const std::string& name) const;
};

Table read(const std::filesystem::path& path);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);

}  // namespace dcabc::csv
