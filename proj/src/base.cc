// src/base.cc

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

#include "zeroseg/base.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <mutex>

namespace zeroseg {

namespace {

LogLevel LevelFromEnv() {
  const char *env = std::getenv("ZEROSEG_LOG");
  if (env == nullptr) return LogLevel::kWarning;
  if (std::strcmp(env, "quiet") == 0) return LogLevel::kQuiet;
  if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
  if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
  return LogLevel::kWarning;
}

std::atomic<int> &LevelStorage() {
  static std::atomic<int> level(static_cast<int>(LevelFromEnv()));
  return level;
}

std::mutex log_mutex;

}  // namespace

LogLevel GetLogLevel() { return static_cast<LogLevel>(LevelStorage().load()); }

void SetLogLevel(LogLevel level) { LevelStorage().store(static_cast<int>(level)); }

LogMessage::LogMessage(LogLevel level, const char *func) : level_(level) {
  switch (level) {
    case LogLevel::kWarning: ss_ << "WARNING (" << func << "): "; break;
    case LogLevel::kDebug: ss_ << "VLOG (" << func << "): "; break;
    default: ss_ << "LOG (" << func << "): "; break;
  }
}

LogMessage::~LogMessage() {
  if (static_cast<int>(level_) > static_cast<int>(GetLogLevel())) return;
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cerr << ss_.str() << '\n';
}

}  // namespace zeroseg
