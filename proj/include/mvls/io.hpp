#pragma once

#include <string>
#include <vector>

namespace mvls::io {

// Shortest round-trip decimal (17 significant digits) so that emitted CSVs
// are byte-checkable across runs.
std::string format_double(double v);

// write-temp-then-rename
void write_text_atomic(const std::string& path, const std::string& content);

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // numeric columns only
};

std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows);

// Parses a numeric CSV with a header row. Non-numeric leading columns are not
// supported here; callers with mixed columns parse themselves.
Csv read_csv(const std::string& path);

}  // namespace mvls::io
