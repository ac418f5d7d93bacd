// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <system_error>
#include <vector>

namespace stereotrack::detail {

/// Shortest decimal string that parses back to exactly the same double.
/// Serializing a parsed file therefore reproduces it byte for byte.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Fixed-point with `decimals` digits after the point.
inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return std::string(buf);
}

inline bool parse_double(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

/// Splits a row on commas and/or whitespace. Returns false when a token is
/// not numeric.
inline bool split_numeric_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::string tok;
  auto flush = [&]() {
    if (tok.empty()) return true;
    double v = 0.0;
    if (!parse_double(tok, v)) return false;
    out.push_back(v);
    tok.clear();
    return true;
  };
  for (char c : line) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!flush()) return false;
    } else {
      tok.push_back(c);
    }
  }
  return flush();
}

}  // namespace stereotrack::detail
