#pragma once

#include <charconv>
#include <string>
#include <string_view>

namespace riis {

// Shortest round-trip decimal form; locale independent, so CSV bytes are stable.
inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed-precision variant for human-readable tables.
inline std::string fmt_fixed(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view text, double& out);

}  // namespace riis
