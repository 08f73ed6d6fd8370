#pragma once

#include <string>
#include <vector>

namespace bssroute::detail {

// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

std::string trim(const std::string& s);

}  // namespace bssroute::detail
