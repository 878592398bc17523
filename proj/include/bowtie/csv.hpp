#pragma once

#include <charconv>
#include <string>

namespace bowtie {

// Shortest text that round-trips at 17 significant digits; LF-terminated rows are built on top.
inline void append_number(std::string& out, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

inline std::string format_number(double x) {
  std::string s;
  append_number(s, x);
  return s;
}

}  // namespace bowtie
