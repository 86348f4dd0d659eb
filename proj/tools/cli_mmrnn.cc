// cli_mmrnn.cc
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
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "cmdlm/multimodal.h"

namespace cmdlm {

namespace {

// Reads pairs and resolves features against a model's declared dimension.
std::vector<MmPair> LoadPairs(const std::string& pairs_path,
                              const std::string& feats_path, int32_t feat_dim,
                              bool strict) {
  const std::vector<PairRow> rows = ReadPairRows(pairs_path);
  const FeatureMap feats = ReadFeatureFile(feats_path);
  std::vector<std::string> missing;
  std::vector<MmPair> pairs =
      ResolvePairs(rows, feats, feat_dim, strict, &missing);
  for (const std::string& id : missing)
    std::fprintf(stderr,
                 "warning: no feature vector for image id '%s', using zeros\n",
                 id.c_str());
  return pairs;
}

}  // namespace

void RegisterMmrnnCli(CLI::App& app) {
  auto* mm = app.add_subcommand("mmrnn", "visually conditioned recurrent LMs");
  mm->require_subcommand(1);

  {
    auto* cmd = mm->add_subcommand(
        "attach", "add a zero-initialized feature projection to a checkpoint");
    auto model = std::make_shared<std::string>();
    auto feat_dim = std::make_shared<int>(0);
    auto seed = std::make_shared<uint64_t>(0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "text-only checkpoint")->required();
    cmd->add_option("--feat-dim", *feat_dim, "feature dimension")->required();
    cmd->add_option("--seed", *seed, "reserved for future init policies");
    cmd->add_option("--out", *out, "output checkpoint")->required();
    cmd->callback([=]() {
      const RnnLm<float> base = LoadRnnCheckpoint<float>(*model);
      const RnnLm<float> attached = AttachEncoder(base, *feat_dim, *seed);
      SaveRnnCheckpoint(*out, attached);
      std::printf("feat-dim %d params %llu\n", *feat_dim,
                  static_cast<unsigned long long>(
                      ParamCount(attached.params.config)));
    });
  }

  {
    auto* cmd = mm->add_subcommand("train", "train on command-image pairs");
    auto model = std::make_shared<std::string>();
    auto pairs_path = std::make_shared<std::string>();
    auto feats_path = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto tc = std::make_shared<TrainConfig>();
    cmd->add_option("--model", *model, "attached checkpoint")->required();
    cmd->add_option("--pairs", *pairs_path, "`image_id<TAB>sentence` lines")
        ->required();
    cmd->add_option("--features", *feats_path, "feature file")->required();
    cmd->add_option("--epochs", tc->epochs, "training epochs");
    cmd->add_option("--lr", tc->learning_rate, "learning rate");
    cmd->add_option("--batch-size", tc->batch_size, "sentences per update");
    cmd->add_option("--clip", tc->clip_norm, "global gradient norm cap");
    cmd->add_option("--optimizer", tc->optimizer, "sgd or adam");
    cmd->add_option("--seed", tc->seed, "training seed");
    cmd->add_option("--out", *out, "output checkpoint")->required();
    cmd->callback([=]() {
      RnnLm<float> lm = LoadRnnCheckpoint<float>(*model);
      std::vector<MmPair> pairs = LoadPairs(
          *pairs_path, *feats_path, lm.params.config.feat_dim, true);
      const std::vector<double> losses = MmTrain(&lm, pairs, *tc);
      for (size_t e = 0; e < losses.size(); ++e)
        std::printf("epoch %zu loss %.6f\n", e + 1, losses[e]);
      SaveRnnCheckpoint(*out, lm);
    });
  }

  {
    auto* cmd = mm->add_subcommand(
        "finetune", "continue training a checkpoint on new pairs");
    auto model = std::make_shared<std::string>();
    auto pairs_path = std::make_shared<std::string>();
    auto feats_path = std::make_shared<std::string>();
    auto epochs = std::make_shared<int>(25);
    auto out = std::make_shared<std::string>();
    auto tc = std::make_shared<TrainConfig>();
    cmd->add_option("--model", *model, "attached checkpoint")->required();
    cmd->add_option("--pairs", *pairs_path, "`image_id<TAB>sentence` lines")
        ->required();
    cmd->add_option("--features", *feats_path, "feature file")->required();
    cmd->add_option("--epochs", *epochs, "adaptation epochs");
    cmd->add_option("--lr", tc->learning_rate, "learning rate");
    cmd->add_option("--batch-size", tc->batch_size, "sentences per update");
    cmd->add_option("--seed", tc->seed, "training seed");
    cmd->add_option("--out", *out, "output checkpoint")->required();
    cmd->callback([=]() {
      RnnLm<float> lm = LoadRnnCheckpoint<float>(*model);
      std::vector<MmPair> pairs = LoadPairs(
          *pairs_path, *feats_path, lm.params.config.feat_dim, true);
      const std::vector<double> losses = MmFinetune(&lm, pairs, *epochs, *tc);
      for (size_t e = 0; e < losses.size(); ++e)
        std::printf("epoch %zu loss %.6f\n", e + 1, losses[e]);
      SaveRnnCheckpoint(*out, lm);
    });
  }

  {
    auto* cmd = mm->add_subcommand(
        "score", "per-pair natural-log probability given the feature");
    auto model = std::make_shared<std::string>();
    auto pairs_path = std::make_shared<std::string>();
    auto feats_path = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "attached checkpoint")->required();
    cmd->add_option("--pairs", *pairs_path, "`image_id<TAB>sentence` lines")
        ->required();
    cmd->add_option("--features", *feats_path, "feature file")->required();
    cmd->callback([=]() {
      RnnLm<float> lm = LoadRnnCheckpoint<float>(*model);
      const std::vector<MmPair> pairs = LoadPairs(
          *pairs_path, *feats_path, lm.params.config.feat_dim, false);
      for (const MmPair& pair : pairs)
        std::printf("%.6f\t%s\t%s\n", MmScore(lm, pair.command, pair.feature),
                    pair.image_id.c_str(), JoinWords(pair.command).c_str());
    });
  }

  {
    auto* cmd = mm->add_subcommand("ppl", "conditional perplexity over pairs");
    auto model = std::make_shared<std::string>();
    auto pairs_path = std::make_shared<std::string>();
    auto feats_path = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "attached checkpoint")->required();
    cmd->add_option("--pairs", *pairs_path, "`image_id<TAB>sentence` lines")
        ->required();
    cmd->add_option("--features", *feats_path, "feature file")->required();
    cmd->callback([=]() {
      RnnLm<float> lm = LoadRnnCheckpoint<float>(*model);
      const std::vector<MmPair> pairs = LoadPairs(
          *pairs_path, *feats_path, lm.params.config.feat_dim, false);
      std::printf("%.6f\n", MmPerplexity(lm, pairs));
    });
  }
}

}  // namespace cmdlm
