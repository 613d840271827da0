#pragma once

// Line-oriented sectioned text shared by the feeder and scenario formats.

#include <charconv>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lvse/error.hpp"

namespace lvse::detail {

struct Record {
  std::string file;
  std::size_t line = 0;
  std::vector<std::string> fields;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(file, line, what); }

  void expect_fields(std::size_t lo, std::size_t hi) const {
    if (fields.size() < lo || fields.size() > hi)
      fail("expected " + (lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi)) +
           " fields, got " + std::to_string(fields.size()));
  }

  double number(std::size_t i) const {
    const std::string& s = fields.at(i);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("not a number: '" + s + "'");
    return v;
  }
};

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Splits `text` into `[section]` blocks of comma-separated records; `#` starts a comment.
inline std::map<std::string, std::vector<Record>> split_sections(std::string_view text, const std::string& file,
                                                                const std::vector<std::string_view>& allowed) {
  std::map<std::string, std::vector<Record>> out;
  for (auto name : allowed) out[std::string(name)];
  std::string current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(file, line_no, "malformed section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (!out.contains(current)) throw ParseError(file, line_no, "unknown section [" + current + "]");
      continue;
    }
    if (current.empty()) throw ParseError(file, line_no, "record outside of any section");
    out[current].push_back({file, line_no, split(line, ',')});
  }
  return out;
}

}  // namespace lvse::detail
