// cli_rescore.cc
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

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "cmdlm/multimodal.h"
#include "cmdlm/ngram.h"
#include "cmdlm/rescore.h"
#include "cmdlm/rnnlm.h"

namespace cmdlm {

namespace {

bool IsRnnCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open model: " + path);
  char magic[8] = {};
  is.read(magic, 8);
  return is.gcount() == 8 && std::memcmp(magic, "CMDLMRNN", 8) == 0;
}

}  // namespace

void RegisterRescoreCli(CLI::App& app) {
  auto* rescore = app.add_subcommand(
      "rescore", "reorder n-best lists with a second-pass language model");
  rescore->require_subcommand(1);
  auto* cmd = rescore->add_subcommand("run", "rescore a JSONL n-best file");
  auto model = std::make_shared<std::string>();
  auto nbest_path = std::make_shared<std::string>();
  auto feats_path = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto cfg = std::make_shared<RescoreConfig>();
  cmd->add_option("--model", *model, "ARPA, mixture spec, or RNN checkpoint")
      ->required();
  cmd->add_option("--nbest", *nbest_path, "JSONL n-best file")->required();
  cmd->add_option("--lm-weight", cfg->lm_weight, "language model scale");
  cmd->add_option("--wip", cfg->word_insertion_penalty,
                  "word insertion penalty");
  cmd->add_flag("--replace-firstpass-lm", cfg->replace_firstpass_lm,
                "drop the first-pass lm score from the combination");
  cmd->add_option("--features", *feats_path,
                  "feature file for multimodal checkpoints");
  cmd->add_option("--out", *out, "rescored JSONL output")->required();
  cmd->callback([=]() {
    const std::vector<NBestList> lists = ReadNBestFile(*nbest_path);
    std::vector<NBestList> rescored;
    rescored.reserve(lists.size());

    if (IsRnnCheckpoint(*model)) {
      const RnnLm<float> lm = LoadRnnCheckpoint<float>(*model);
      const int32_t feat_dim = lm.params.config.feat_dim;
      if (feat_dim > 0 && feats_path->empty())
        throw DataError("multimodal checkpoint requires --features");
      if (feat_dim == 0 && !feats_path->empty())
        throw DataError("--features given but the model takes no features");
      FeatureMap features;
      if (feat_dim > 0) features = ReadFeatureFile(*feats_path);
      for (const NBestList& nb : lists) {
        std::vector<double> feature(static_cast<size_t>(
                                        feat_dim > 0 ? feat_dim : 0),
                                    0.0);
        if (feat_dim > 0 && nb.image_id && *nb.image_id != "NONE") {
          const auto it = features.find(*nb.image_id);
          if (it == features.end()) {
            std::fprintf(stderr,
                         "warning: no feature vector for image id '%s', "
                         "using zeros\n",
                         nb.image_id->c_str());
          } else {
            feature = it->second;
          }
        }
        const SentenceScorer scorer = [&](const Command& c) {
          return feat_dim > 0 ? MmScore(lm, c, feature)
                              : SentenceLogProbLn(lm, c);
        };
        rescored.push_back(Rescore(nb, scorer, *cfg));
      }
    } else {
      if (!feats_path->empty())
        throw DataError("--features given but the model takes no features");
      const std::unique_ptr<ConditionalModel> lm = LoadModelFile(*model);
      const SentenceScorer scorer = [&](const Command& c) {
        return SentenceLogProb10(*lm, c) * std::log(10.0);
      };
      for (const NBestList& nb : lists)
        rescored.push_back(Rescore(nb, scorer, *cfg));
    }

    WriteNBestFile(*out, rescored);
    for (const NBestList& nb : rescored)
      std::printf("%s\t%s\n", nb.utt_id.c_str(),
                  JoinWords(OneBest(nb)).c_str());
  });
}

}  // namespace cmdlm
