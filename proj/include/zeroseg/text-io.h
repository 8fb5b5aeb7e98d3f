// zeroseg/text-io.h

// Copyright 2026  The zeroseg Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Helpers for the line-oriented text formats.  Fields are separated by runs
// of tabs or spaces; blank lines are skipped.  Parse errors carry the 1-based
// line number.

#ifndef ZEROSEG_TEXT_IO_H_
#define ZEROSEG_TEXT_IO_H_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "zeroseg/base.h"

namespace zeroseg {

inline std::vector<std::string> SplitFields(std::string_view line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::int64_t ParseInt(const std::string &s, std::uint64_t lineno) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("expected an integer, got \"" + s + "\"", lineno);
  return v;
}

inline double ParseDouble(const std::string &s, std::uint64_t lineno) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("expected a number, got \"" + s + "\"", lineno);
  return v;
}

/// Calls fn(fields, line_number) for every non-blank line of `path`.
template <typename Fn>
void ForEachTextRecord(const std::string &path, Fn &&fn) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto fields = SplitFields(line);
    if (!fields.empty()) fn(fields, lineno);
  }
}

}  // namespace zeroseg

#endif  // ZEROSEG_TEXT_IO_H_
