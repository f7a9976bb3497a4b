#include "seatq/numeric_text.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace seatq {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

namespace {

template <typename T>
T parse_number(std::string_view token, const char* what) {
  T value{};
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (token.empty() || ec != std::errc() || ptr != last) {
    throw std::invalid_argument(std::string("malformed ") + what + " '" +
                                std::string(token) + "'");
  }
  return value;
}

}  // namespace

double parse_double(std::string_view token) {
  return parse_number<double>(token, "number");
}

long long parse_int(std::string_view token) {
  return parse_number<long long>(token, "integer");
}

std::uint64_t parse_u64(std::string_view token) {
  return parse_number<std::uint64_t>(token, "unsigned integer");
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

}  // namespace seatq
