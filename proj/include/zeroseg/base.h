// zeroseg/base.h

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

#ifndef ZEROSEG_BASE_H_
#define ZEROSEG_BASE_H_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace zeroseg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error hierarchy.  Each class names the contract that was violated; callers
// that only care about "something went wrong" catch zeroseg::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary or text input.  `offset` is the byte offset (binary) or
/// line number (text) at which parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string &what, std::uint64_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class ConsistencyError : public Error { using Error::Error; };
class MetadataError : public Error { using Error::Error; };
class ParameterError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class AlignmentError : public Error { using Error::Error; };
class BoundsError : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class SpecError : public Error { using Error::Error; };

// Logging.  Verbosity comes from ZEROSEG_LOG (quiet | info | debug), read
// once; SetLogLevel overrides it.
enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2, kDebug = 3 };

LogLevel GetLogLevel();
void SetLogLevel(LogLevel level);

class LogMessage {
 public:
  LogMessage(LogLevel level, const char *func);
  ~LogMessage();
  std::ostream &stream() { return ss_; }

 private:
  LogLevel level_;
  std::ostringstream ss_;
};

}  // namespace zeroseg

#define ZS_LOG ::zeroseg::LogMessage(::zeroseg::LogLevel::kInfo, __func__).stream()
#define ZS_WARN ::zeroseg::LogMessage(::zeroseg::LogLevel::kWarning, __func__).stream()
#define ZS_VLOG ::zeroseg::LogMessage(::zeroseg::LogLevel::kDebug, __func__).stream()

#endif  // ZEROSEG_BASE_H_
