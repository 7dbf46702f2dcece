#pragma once

#include <string>
#include <vector>

namespace densemu {

// Round-trip formatting for doubles ("%.17g").
std::string format_double(double v);

// Reads a comma-separated numeric matrix. A single leading non-numeric
// row is treated as a header and skipped; any other non-numeric cell is
// an error. Rows may be ragged; shape checks are the caller's job.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path);

void write_numeric_csv(const std::string& path,
                       const std::vector<std::vector<double>>& rows,
                       const std::string& header = "");

}  // namespace densemu
