#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace keyatm {

// Shortest round-trippable-enough decimal form used in every CSV artifact.
std::string format_double(double x);

// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

// Reads a CSV file; the first row must equal `header`.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& header);

std::string read_file(const std::filesystem::path& path);

} // namespace keyatm
