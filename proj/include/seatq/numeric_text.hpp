#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace seatq {

// Shortest round-trip decimal, '.' separator regardless of locale.
std::string format_double(double value);

// Strict parsers: the whole token must be consumed. Throw
// std::invalid_argument naming the token otherwise.
double parse_double(std::string_view token);
long long parse_int(std::string_view token);
std::uint64_t parse_u64(std::string_view token);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace seatq
