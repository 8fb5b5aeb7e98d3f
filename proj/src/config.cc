// src/config.cc

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

#include "zeroseg/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "zeroseg/base.h"

namespace zeroseg {

namespace {

std::string Trim(const std::string &s) {
  const char *ws = " \t\r";
  const size_t b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string> SplitComma(const std::string &s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

template <typename T>
bool ParseNumber(const std::string &s, T *out) {
  const char *end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, *out);
  return ec == std::errc() && ptr == end;
}

template <typename T>
std::string Join(const std::vector<T> &v) {
  std::ostringstream os;
  os.precision(17);
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

std::string ConfigSection::Raw(const std::string &key, const std::string &def) const {
  auto it = values_.find(key);
  return it == values_.end() ? def : it->second;
}

void ConfigSection::Bad(const std::string &key, const std::string &what) const {
  throw ConfigError("config key " + (name_.empty() ? key : name_ + "." + key) + ": " + what);
}

std::string ConfigSection::GetString(const std::string &key, const std::string &def) const {
  const std::string v = Raw(key, def);
  resolved_[key] = v;
  return v;
}

double ConfigSection::GetDouble(const std::string &key, double def) const {
  if (!Has(key)) {
    std::ostringstream os;
    os.precision(17);
    os << def;
    resolved_[key] = os.str();
    return def;
  }
  double v;
  if (!ParseNumber(values_.at(key), &v)) Bad(key, "expected a number, got \"" + values_.at(key) + "\"");
  resolved_[key] = values_.at(key);
  return v;
}

int ConfigSection::GetInt(const std::string &key, int def) const {
  int v = def;
  if (Has(key) && !ParseNumber(values_.at(key), &v))
    Bad(key, "expected an integer, got \"" + values_.at(key) + "\"");
  resolved_[key] = std::to_string(v);
  return v;
}

std::uint64_t ConfigSection::GetUint64(const std::string &key, std::uint64_t def) const {
  std::uint64_t v = def;
  if (Has(key) && !ParseNumber(values_.at(key), &v))
    Bad(key, "expected a non-negative integer, got \"" + values_.at(key) + "\"");
  resolved_[key] = std::to_string(v);
  return v;
}

bool ConfigSection::GetBool(const std::string &key, bool def) const {
  bool v = def;
  if (Has(key)) {
    const std::string &s = values_.at(key);
    if (s == "true" || s == "1" || s == "yes") {
      v = true;
    } else if (s == "false" || s == "0" || s == "no") {
      v = false;
    } else {
      Bad(key, "expected true or false, got \"" + s + "\"");
    }
  }
  resolved_[key] = v ? "true" : "false";
  return v;
}

std::vector<int> ConfigSection::GetIntList(const std::string &key,
                                           const std::vector<int> &def) const {
  std::vector<int> v = def;
  if (Has(key)) {
    v.clear();
    for (const auto &part : SplitComma(values_.at(key))) {
      int x;
      if (!ParseNumber(part, &x)) Bad(key, "expected a comma-separated integer list");
      v.push_back(x);
    }
  }
  resolved_[key] = Join(v);
  return v;
}

std::vector<double> ConfigSection::GetDoubleList(const std::string &key,
                                                 const std::vector<double> &def) const {
  std::vector<double> v = def;
  if (Has(key)) {
    v.clear();
    for (const auto &part : SplitComma(values_.at(key))) {
      double x;
      if (!ParseNumber(part, &x)) Bad(key, "expected a comma-separated number list");
      v.push_back(x);
    }
  }
  resolved_[key] = Join(v);
  return v;
}

std::string ConfigSection::GetChoice(const std::string &key, const std::string &def,
                                     const std::set<std::string> &choices) const {
  const std::string v = GetString(key, def);
  if (!choices.count(v)) {
    std::string list;
    for (const auto &c : choices) list += (list.empty() ? "" : "|") + c;
    Bad(key, "expected one of " + list + ", got \"" + v + "\"");
  }
  return v;
}

void ConfigSection::CheckKeys(const std::set<std::string> &allowed) const {
  for (const auto &[key, value] : values_)
    if (!allowed.count(key)) Bad(key, "unknown key");
}

Config Config::Parse(std::istream &is, const std::string &source) {
  Config c;
  std::string current;
  c.sections_.emplace(current, ConfigSection(current));
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": unterminated section header");
      current = Trim(t.substr(1, t.size() - 2));
      if (current.empty()) throw ConfigError(where + ": empty section name");
      c.sections_.emplace(current, ConfigSection(current));
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = Trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    ConfigSection &sec = c.sections_.at(current);
    if (sec.Has(key)) throw ConfigError(where + ": duplicate key " + key);
    sec.Set(key, Trim(t.substr(eq + 1)));
  }
  return c;
}

Config Config::Load(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  return Parse(is, path);
}

ConfigSection Config::Section(const std::string &name) const {
  auto it = sections_.find(name);
  return it == sections_.end() ? ConfigSection(name) : it->second;
}

ConfigSection &Config::MutableSection(const std::string &name) {
  return sections_.try_emplace(name, ConfigSection(name)).first->second;
}

std::vector<std::string> Config::SectionNames() const {
  std::vector<std::string> names;
  for (const auto &[name, sec] : sections_) names.push_back(name);
  return names;
}

}  // namespace zeroseg
