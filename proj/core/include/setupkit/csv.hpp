// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace setupkit {

/// Shortest decimal text that round-trips the double.
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

/// Splits one CSV line on commas and trims surrounding whitespace. No quoting.
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view s);

/// Parses a double, throwing ParseError with `what` as context.
double parse_number(std::string_view text, std::string_view what);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace setupkit
