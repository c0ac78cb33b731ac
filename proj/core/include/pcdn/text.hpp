#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pcdn {

// Shortest representation that parses back to the same double.
std::string format_double(double v);
// Fixed number of significant digits, "%.<digits>g" style.
std::string format_double(double v, int significant_digits);

// Whole-string parses; throw ParseError on trailing garbage or overflow.
double parse_double(std::string_view s);
std::uint64_t parse_u64(std::string_view s);
std::int64_t parse_i64(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace pcdn
