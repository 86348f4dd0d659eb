// cli_corpus.cc
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

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cmdlm/corpus.h"
#include "cmdlm/grammar.h"

namespace cmdlm {

std::string FormatStatsTsv(const DatasetStats& stats) {
  std::ostringstream out;
  out << "n\tunique\toverlap\tproportion\n";
  out << stats.n << "\t" << stats.unique << "\t" << stats.overlap_count << "\t"
      << stats.overlap_proportion << "\n";
  return out.str();
}

void RegisterCorpusCli(CLI::App& app) {
  auto* corpus = app.add_subcommand("corpus", "training corpora and audio");
  corpus->require_subcommand(1);

  {
    auto* cmd = corpus->add_subcommand(
        "folds", "sample seeded training folds of several sizes");
    auto dsl = std::make_shared<std::string>();
    auto fsa = std::make_shared<std::string>();
    auto sizes = std::make_shared<std::vector<uint64_t>>();
    auto folds = std::make_shared<int>(5);
    auto seed = std::make_shared<uint64_t>(0);
    auto mode = std::make_shared<std::string>("production-uniform");
    auto out_dir = std::make_shared<std::string>();
    auto* dsl_opt = cmd->add_option("--dsl", *dsl, "grammar DSL file");
    cmd->add_option("--automaton", *fsa, "serialized automaton")
        ->excludes(dsl_opt);
    cmd->add_option("--sizes", *sizes, "training sizes, strictly increasing")
        ->required()
        ->delimiter(',');
    cmd->add_option("--folds", *folds, "folds per size");
    cmd->add_option("--seed", *seed, "random seed");
    cmd->add_option("--mode", *mode, "production-uniform or language-uniform");
    cmd->add_option("--out-dir", *out_dir, "output directory")->required();
    cmd->callback([=]() {
      Automaton a = dsl->empty() ? ReadAutomatonFile(*fsa)
                                 : CompileGrammar(ParseGrammar(ReadTextFile(*dsl)));
      FoldSpec spec;
      spec.sizes = *sizes;
      spec.folds_per_size = *folds;
      spec.seed = *seed;
      std::filesystem::create_directories(*out_dir);
      for (const Fold& f : MakeFolds(a, spec, ParseSampleMode(*mode))) {
        std::string name = "train_" + std::to_string(f.size) + "_fold" +
                           std::to_string(f.fold) + ".txt";
        WriteCommandFile(*out_dir + "/" + name, f.commands);
        std::cout << name << "\t" << f.commands.size() << "\n";
      }
    });
  }

  {
    auto* cmd = corpus->add_subcommand(
        "stats", "train/eval overlap statistics");
    auto train = std::make_shared<std::string>();
    auto eval = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--train", *train, "training command file")->required();
    cmd->add_option("--eval", *eval, "evaluation command file")->required();
    cmd->add_option("--out", *out, "output TSV (default stdout)");
    cmd->callback([=]() {
      DatasetStats stats =
          ComputeStats(ReadCommandFile(*train), ReadCommandFile(*eval));
      std::string tsv = FormatStatsTsv(stats);
      if (out->empty()) {
        std::cout << tsv;
      } else {
        WriteTextFile(*out, tsv);
      }
    });
  }

  {
    auto* cmd = corpus->add_subcommand(
        "mixnoise", "mix noise into clean audio at a target SNR");
    auto clean = std::make_shared<std::string>();
    auto noise = std::make_shared<std::string>();
    auto snr = std::make_shared<double>(10.0);
    auto seed = std::make_shared<uint64_t>(0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--clean", *clean, "clean wav (PCM16 mono)")->required();
    cmd->add_option("--noise", *noise, "noise wav (PCM16 mono)")->required();
    cmd->add_option("--snr-db", *snr, "target SNR in dB");
    cmd->add_option("--seed", *seed, "seed for the noise offset");
    cmd->add_option("--out", *out, "output wav")->required();
    cmd->callback([=]() {
      AudioClip mixed =
          MixNoise(ReadWav(*clean), ReadWav(*noise), *snr, *seed);
      WriteWav(*out, mixed);
      std::cout << "samples " << mixed.samples.size() << " rate "
                << mixed.sample_rate << "\n";
    });
  }
}

}  // namespace cmdlm
