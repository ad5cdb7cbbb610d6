#ifndef COMMUTE_CSV_HPP
#define COMMUTE_CSV_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "commute/error.hpp"

// Minimal CSV helpers. Fields are plain comma-separated tokens; quoting is not
// supported because none of the file formats carry commas inside fields.
namespace commute::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) {
    throw LoadError("cannot parse integer " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return v;
}

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) {
    throw LoadError("cannot parse number " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Reads a header-bearing CSV stream. `expected` is matched exactly against
/// the header; `on_row` receives the split fields and the 1-based line number.
inline void read(std::istream& in, const std::vector<std::string_view>& expected, std::string_view source,
                 const std::function<void(const std::vector<std::string_view>&, std::size_t)>& on_row) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (line_no == 1 && view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (view.empty()) continue;
    auto fields = split(view);
    if (!have_header) {
      if (fields != expected) {
        std::string want;
        for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + std::string(expected[i]);
        throw LoadError(std::string(source) + ": expected header '" + want + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != expected.size()) {
      throw LoadError(std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(expected.size()) + " fields, got " + std::to_string(fields.size()));
    }
    on_row(fields, line_no);
  }
  if (!have_header) throw LoadError(std::string(source) + ": missing header");
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open '" + path + "' for writing");
  return out;
}

} // namespace commute::csv

#endif // COMMUTE_CSV_HPP
