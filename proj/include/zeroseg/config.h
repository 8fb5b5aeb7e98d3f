// zeroseg/config.h

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

// Pipeline configuration files: UTF-8 "key = value" lines grouped under
// "[stage]" headers.  Keys before the first header belong to the global
// section "".  Blank lines and lines starting with '#' or ';' are ignored.

#ifndef ZEROSEG_CONFIG_H_
#define ZEROSEG_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace zeroseg {

/// Key/value pairs of one section.  The typed getters record the value they
/// resolve (given or default) so a stage can report its effective
/// parameters; malformed values throw ConfigError naming section.key.
class ConfigSection {
 public:
  ConfigSection() = default;
  explicit ConfigSection(std::string name) : name_(std::move(name)) {}

  const std::string &name() const { return name_; }
  void Set(const std::string &key, const std::string &value) { values_[key] = value; }
  bool Has(const std::string &key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string> &values() const { return values_; }

  std::string GetString(const std::string &key, const std::string &def) const;
  double GetDouble(const std::string &key, double def) const;
  int GetInt(const std::string &key, int def) const;
  std::uint64_t GetUint64(const std::string &key, std::uint64_t def) const;
  bool GetBool(const std::string &key, bool def) const;
  std::vector<int> GetIntList(const std::string &key, const std::vector<int> &def) const;
  std::vector<double> GetDoubleList(const std::string &key,
                                    const std::vector<double> &def) const;
  /// Like GetString but restricted to `choices`.
  std::string GetChoice(const std::string &key, const std::string &def,
                        const std::set<std::string> &choices) const;

  /// Throws ConfigError for a key outside `allowed`.
  void CheckKeys(const std::set<std::string> &allowed) const;

  /// Parameters resolved by the getters so far.
  const std::map<std::string, std::string> &resolved() const { return resolved_; }

 private:
  std::string Raw(const std::string &key, const std::string &def) const;
  [[noreturn]] void Bad(const std::string &key, const std::string &what) const;

  std::string name_;
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
};

class Config {
 public:
  static Config Parse(std::istream &is, const std::string &source = "<config>");
  static Config Load(const std::string &path);

  /// A copy of the named section; an empty section if absent.
  ConfigSection Section(const std::string &name) const;
  ConfigSection &MutableSection(const std::string &name);
  std::vector<std::string> SectionNames() const;

 private:
  std::map<std::string, ConfigSection> sections_;
};

}  // namespace zeroseg

#endif  // ZEROSEG_CONFIG_H_
