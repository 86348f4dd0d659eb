// cli_exp.cc
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmdlm/experiment.h"
#include "cmdlm/types.h"

namespace cmdlm {

void RegisterExpCli(CLI::App& app) {
  auto* exp = app.add_subcommand("exp", "end-to-end adaptation experiments");
  exp->require_subcommand(1);

  {
    auto* cmd = exp->add_subcommand(
        "run", "run every (row, size, fold) cell and render the report");
    auto config_path = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(0);
    auto sizes = std::make_shared<std::vector<uint64_t>>();
    auto folds = std::make_shared<int>(0);
    auto cache_dir = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>("exp-out");
    cmd->add_option("--config", *config_path, "experiment config JSON")
        ->required();
    auto* seed_opt = cmd->add_option("--seed", *seed, "override config seed");
    auto* sizes_opt = cmd->add_option(
        "--sizes", *sizes, "override training sizes (strictly increasing)");
    auto* folds_opt =
        cmd->add_option("--folds", *folds, "override folds per size");
    auto* cache_opt =
        cmd->add_option("--cache", *cache_dir, "override cache directory");
    cmd->add_option("--out", *out_dir, "report output directory");
    cmd->callback([=]() {
      ExperimentConfig cfg = LoadExperimentConfig(*config_path);
      if (seed_opt->count()) cfg.seed = *seed;
      if (sizes_opt->count()) cfg.sizes = *sizes;
      if (folds_opt->count()) cfg.folds = *folds;
      if (cache_opt->count()) cfg.cache_dir = *cache_dir;

      const ExperimentReport report = RunExperiment(cfg);
      const std::string rendered = RenderReport(cfg, report);

      std::filesystem::create_directories(*out_dir);
      const std::filesystem::path out(*out_dir);
      WriteTextFile((out / "report.txt").string(), rendered);
      WriteTextFile((out / "cells.tsv").string(), RenderCellsTsv(report));

      std::fputs(rendered.c_str(), stdout);
      std::fprintf(stderr, "computed %d cells, reused %d from cache\n",
                   report.computed, report.cached);
    });
  }
}

}  // namespace cmdlm
