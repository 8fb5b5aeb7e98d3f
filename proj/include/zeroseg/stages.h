// zeroseg/stages.h

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

// Command-line stages.  Every stage reads declared input files, takes its
// parameters from one config section, writes fixed file names into its
// output directory and records a manifest (inputs, parameters, seed and
// SHA-256 hashes of inputs and outputs).

#ifndef ZEROSEG_STAGES_H_
#define ZEROSEG_STAGES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zeroseg/base.h"
#include "zeroseg/config.h"

namespace zeroseg {

struct InputRole {
  std::string name;  // command-line flag without dashes
  std::string help;
  bool required = true;
  bool multiple = false;
};

struct StageSpec {
  std::string name;
  std::string help;
  std::vector<InputRole> inputs;
  std::set<std::string> keys;  // allowed keys of the config section
};

/// All stages in pipeline order.
const std::vector<StageSpec> &Stages();
/// Throws ConfigError for an unknown name.
const StageSpec &FindStage(const std::string &name);

struct StageRequest {
  std::string stage;
  std::string out_dir;
  std::map<std::string, std::vector<std::string>> inputs;  // role -> paths
  ConfigSection params;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct FileRecord {
  std::string role;
  std::string path;
  std::string sha256;
};

struct StageResult {
  std::string stage;
  std::string out_dir;
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;  // path relative to out_dir
  std::map<std::string, std::string> parameters;
  std::uint64_t seed = 0;
  int threads = 1;
  double seconds = 0.0;
};

/// Error raised while running a stage; what() names the stage.
class StageError : public Error {
 public:
  StageError(const std::string &stage, const std::string &message)
      : Error("stage " + stage + " failed: " + message), stage_(stage) {}
  const std::string &stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Runs one stage and writes <out_dir>/manifest.json.  Any failure is
/// rethrown as StageError.
StageResult RunStage(const StageRequest &request);

/// Runs the stages selected by [pipeline] stages (default: all) in order,
/// each in <out_dir>/<stage>, and writes <out_dir>/manifest.json listing
/// every stage.  A stage's seed is its section's "seed", else `seed`, else
/// the global "seed" key, else 0.
std::vector<StageResult> RunPipeline(const Config &config, const std::string &config_path,
                                     const std::string &out_dir,
                                     std::optional<std::uint64_t> seed, int threads);

/// Hex SHA-256 of a file's bytes.
std::string Sha256File(const std::string &path);

}  // namespace zeroseg

#endif  // ZEROSEG_STAGES_H_
