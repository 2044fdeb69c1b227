#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pvdis::text {

/// Shortest decimal form that parses back to the same 64-bit value.
std::string format_double(double v);

/// Strict full-string parse; throws ParseError with `context` on failure.
double parse_double(std::string_view s, const std::string& context);
long parse_long(std::string_view s, const std::string& context);

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

} // namespace pvdis::text
