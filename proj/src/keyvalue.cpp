#include "keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "vstitch/error.hpp"

namespace vstitch::kv {

void fail(std::string_view origin, int line, const std::string& what) {
  throw Error(ErrorCode::kParse, std::string(origin) + ":" + std::to_string(line) + ": " + what);
}

std::vector<double> numbers(std::string_view value, std::string_view origin, int line, std::size_t expected) {
  std::vector<double> out;
  std::istringstream in{std::string(value)};
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      fail(origin, line, "bad number '" + tok + "'");
    }
    out.push_back(v);
  }
  if (out.size() != expected) {
    fail(origin, line, "expected " + std::to_string(expected) + " values, got " + std::to_string(out.size()));
  }
  return out;
}

double integer(std::string_view value, std::string_view origin, int line) {
  const double v = numbers(value, origin, line, 1).front();
  if (v != std::floor(v)) fail(origin, line, "expected an integer");
  return v;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<Entry> entries(std::string_view text, std::string_view origin) {
  std::vector<Entry> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string t = trim(raw);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(origin, line, "expected key=value");
    Entry e{line, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1))};
    if (e.key.empty()) fail(origin, line, "empty key");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace vstitch::kv
