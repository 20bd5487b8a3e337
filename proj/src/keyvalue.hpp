#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vstitch::kv {

[[noreturn]] void fail(std::string_view origin, int line, const std::string& what);

// Whitespace-separated finite reals; exactly `expected` of them.
std::vector<double> numbers(std::string_view value, std::string_view origin, int line, std::size_t expected);
double integer(std::string_view value, std::string_view origin, int line);

std::string trim(std::string_view s);
// Shortest text that reads back to the same double.
std::string format(double v);

struct Entry {
  int line = 0;
  std::string key;
  std::string value;
};

// Non-blank, non-'#' lines split at the first '='.
std::vector<Entry> entries(std::string_view text, std::string_view origin);

}  // namespace vstitch::kv
