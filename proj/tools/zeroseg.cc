// tools/zeroseg.cc

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

#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zeroseg/base.h"
#include "zeroseg/config.h"
#include "zeroseg/stages.h"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir;
};

void AddCommonOptions(CLI::App *cmd, CommonOptions *opts, bool needs_config) {
  auto *config = cmd->add_option("--config", opts->config_path, "key=value config file")
                     ->check(CLI::ExistingFile);
  if (needs_config) config->required();
  cmd->add_option("--seed", opts->seed, "random seed (overrides the config)");
  cmd->add_option("--threads", opts->threads, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--out", opts->out_dir, "output directory")->required();
}

int RunSubcommand(const zeroseg::StageSpec &spec, const CommonOptions &opts,
                  const std::map<std::string, std::vector<std::string>> &inputs) {
  zeroseg::StageRequest req;
  req.stage = spec.name;
  req.out_dir = opts.out_dir;
  req.threads = opts.threads;
  for (const auto &[role, paths] : inputs)
    if (!paths.empty()) req.inputs[role] = paths;
  try {
    zeroseg::ConfigSection global;
    if (!opts.config_path.empty()) {
      const zeroseg::Config config = zeroseg::Config::Load(opts.config_path);
      req.params = config.Section(spec.name);
      global = config.Section("");
    }
    if (opts.seed) {
      req.seed = *opts.seed;
    } else if (req.params.Has("seed")) {
      req.seed = req.params.GetUint64("seed", 0);
    } else {
      req.seed = global.GetUint64("seed", 0);
    }
  } catch (const std::exception &e) {
    throw zeroseg::StageError(spec.name, e.what());
  }
  zeroseg::RunStage(req);
  return 0;
}

}  // namespace

int main(int argc, char *argv[]) {
  CLI::App app{"zeroseg: zero-resource subword unit discovery and evaluation"};
  app.require_subcommand(1);

  const auto &stages = zeroseg::Stages();
  std::vector<CommonOptions> opts(stages.size());
  std::vector<std::map<std::string, std::vector<std::string>>> inputs(stages.size());
  std::vector<CLI::App *> cmds;
  for (size_t i = 0; i < stages.size(); ++i) {
    CLI::App *cmd = app.add_subcommand(stages[i].name, stages[i].help);
    AddCommonOptions(cmd, &opts[i], false);
    for (const auto &role : stages[i].inputs) {
      auto *opt = cmd->add_option("--" + role.name, inputs[i][role.name], role.help);
      if (role.required) opt->required();
      if (!role.multiple) opt->expected(1);
    }
    cmds.push_back(cmd);
  }
  CommonOptions pipeline_opts;
  CLI::App *pipeline = app.add_subcommand("pipeline", "run every stage in dependency order");
  AddCommonOptions(pipeline, &pipeline_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (pipeline->parsed()) {
      zeroseg::Config config;
      try {
        config = zeroseg::Config::Load(pipeline_opts.config_path);
      } catch (const std::exception &e) {
        throw zeroseg::StageError("pipeline", e.what());
      }
      try {
        zeroseg::RunPipeline(config, pipeline_opts.config_path, pipeline_opts.out_dir,
                             pipeline_opts.seed, pipeline_opts.threads);
      } catch (const zeroseg::StageError &) {
        throw;
      } catch (const std::exception &e) {
        throw zeroseg::StageError("pipeline", e.what());
      }
      return 0;
    }
    for (size_t i = 0; i < cmds.size(); ++i)
      if (cmds[i]->parsed()) return RunSubcommand(stages[i], opts[i], inputs[i]);
  } catch (const zeroseg::StageError &e) {
    std::cerr << "zeroseg: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
