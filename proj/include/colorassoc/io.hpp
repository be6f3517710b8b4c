#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace colorassoc::io {

std::string trim(std::string_view s);

/// Splits on commas and trims each field. No quoting support.
std::vector<std::string> split_csv_line(std::string_view line);

/// Strict decimal parse; throws InputError naming `what` on garbage,
/// trailing characters, or non-finite results.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename so readers never see partial files.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace colorassoc::io
