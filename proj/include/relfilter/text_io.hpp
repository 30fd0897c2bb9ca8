#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace relfilter {

// Reads a UTF-8 text file as lines with trailing '\r' removed.
// Throws DataError when the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames it into place, so readers
// see either the old file or the complete new one.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Fixed-point with `digits` decimals; used for report columns.
std::string format_fixed(double value, int digits = 6);
// Shortest representation that round-trips; used for model files.
std::string format_exact(double value);
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace relfilter
