// cli_rnnlm.cc
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

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cmdlm/rnnlm.h"
#include "cmdlm/rng.h"

namespace cmdlm {

namespace {

// Training hyper-parameters shared by train and finetune.
struct TrainFlags {
  std::shared_ptr<TrainConfig> tc = std::make_shared<TrainConfig>();
  void Register(CLI::App* cmd) {
    cmd->add_option("--lr", tc->learning_rate, "learning rate");
    cmd->add_option("--batch-size", tc->batch_size, "sentences per update");
    cmd->add_option("--truncation", tc->truncation,
                    "BPTT window (0: whole sentence)");
    cmd->add_option("--clip", tc->clip_norm,
                    "global gradient norm cap (0: off)");
    cmd->add_option("--optimizer", tc->optimizer, "sgd or adam");
    cmd->add_option("--seed", tc->seed, "training seed");
  }
};

void PrintEpochLosses(const std::vector<double>& losses) {
  for (size_t e = 0; e < losses.size(); ++e)
    std::printf("epoch %zu loss %.6f\n", e + 1, losses[e]);
}

}  // namespace

void RegisterRnnlmCli(CLI::App& app) {
  auto* rnn = app.add_subcommand("rnnlm", "recurrent language models");
  rnn->require_subcommand(1);

  {
    auto* cmd = rnn->add_subcommand("train", "train a model from text");
    auto corpus = std::make_shared<std::string>();
    auto vocab_path = std::make_shared<std::string>();
    auto vocab_cap = std::make_shared<uint64_t>(10000);
    auto cfg = std::make_shared<RnnConfig>();
    cfg->embed_dim = 512;
    cfg->hidden_dim = 512;
    cfg->num_layers = 2;
    auto untied = std::make_shared<bool>(false);
    auto out = std::make_shared<std::string>();
    auto flags = std::make_shared<TrainFlags>();
    cmd->add_option("--corpus", *corpus, "training text, one sentence per line")
        ->required();
    cmd->add_option("--vocab", *vocab_path,
                    "fixed vocabulary file (default: built from the corpus)");
    cmd->add_option("--vocab-cap", *vocab_cap, "vocabulary size cap");
    cmd->add_option("--embed-dim", cfg->embed_dim, "embedding width");
    cmd->add_option("--hidden-dim", cfg->hidden_dim, "LSTM width");
    cmd->add_option("--layers", cfg->num_layers, "LSTM layer count");
    cmd->add_option("--dropout", cfg->dropout,
                    "dropout on non-recurrent connections");
    cmd->add_flag("--untied", *untied, "separate output projection");
    cmd->add_option("--epochs", flags->tc->epochs, "training epochs");
    flags->Register(cmd);
    cmd->add_option("--out", *out, "output checkpoint")->required();
    cmd->callback([=]() {
      std::vector<Command> text = ReadCommandFile(*corpus);
      RnnLm<float> lm;
      lm.vocab = vocab_path->empty() ? Vocab::Build(text, *vocab_cap)
                                     : Vocab::LoadFile(*vocab_path);
      cfg->vocab_size = lm.vocab.size();
      cfg->tied = !*untied;
      lm.params = InitRnn<float>(*cfg, flags->tc->seed);
      PrintEpochLosses(TrainRnnLm(&lm, text, *flags->tc));
      SaveRnnCheckpoint(*out, lm);
      std::printf("params %llu vocab %d\n",
                  static_cast<unsigned long long>(ParamCount(*cfg)),
                  lm.vocab.size());
    });
  }

  {
    auto* cmd = rnn->add_subcommand(
        "finetune", "continue training a checkpoint on new text");
    auto model = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    auto epochs = std::make_shared<int>(25);
    auto out = std::make_shared<std::string>();
    auto flags = std::make_shared<TrainFlags>();
    cmd->add_option("--model", *model, "input checkpoint")->required();
    cmd->add_option("--corpus", *corpus, "adaptation text")->required();
    cmd->add_option("--epochs", *epochs, "adaptation epochs");
    flags->Register(cmd);
    cmd->add_option("--out", *out, "output checkpoint")->required();
    cmd->callback([=]() {
      RnnLm<float> lm = LoadRnnCheckpoint<float>(*model);
      std::vector<Command> text = ReadCommandFile(*corpus);
      PrintEpochLosses(FinetuneRnnLm(&lm, text, *epochs, *flags->tc));
      SaveRnnCheckpoint(*out, lm);
    });
  }

  {
    auto* cmd = rnn->add_subcommand("ppl", "corpus perplexity");
    auto model = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "checkpoint")->required();
    cmd->add_option("--corpus", *corpus, "text, one sentence per line")
        ->required();
    cmd->callback([=]() {
      RnnLm<float> lm = LoadRnnCheckpoint<float>(*model);
      std::printf("%.6f\n", RnnPerplexity(lm, ReadCommandFile(*corpus)));
    });
  }

  {
    auto* cmd = rnn->add_subcommand("score", "per-sentence natural-log probability");
    auto model = std::make_shared<std::string>();
    auto input = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "checkpoint")->required();
    cmd->add_option("--input", *input, "text, one sentence per line")
        ->required();
    cmd->callback([=]() {
      RnnLm<float> lm = LoadRnnCheckpoint<float>(*model);
      for (const Command& sentence : ReadCommandFile(*input))
        std::printf("%.6f\t%s\n", SentenceLogProbLn(lm, sentence),
                    JoinWords(sentence).c_str());
    });
  }

  {
    auto* cmd = rnn->add_subcommand(
        "gradcheck", "verify analytic gradients against finite differences");
    auto vocab_size = std::make_shared<int>(14);
    auto dim = std::make_shared<int>(8);
    auto layers = std::make_shared<int>(2);
    auto feat_dim = std::make_shared<int>(3);
    auto epsilon = std::make_shared<double>(1e-4);
    auto tolerance = std::make_shared<double>(1e-4);
    auto seed = std::make_shared<uint64_t>(1);
    cmd->add_option("--vocab-size", *vocab_size, "toy vocabulary size");
    cmd->add_option("--dim", *dim, "toy embedding and hidden width");
    cmd->add_option("--layers", *layers, "toy layer count");
    cmd->add_option("--feat-dim", *feat_dim,
                    "feature dimension for the projection check (0: skip)");
    cmd->add_option("--epsilon", *epsilon, "finite-difference step");
    cmd->add_option("--tolerance", *tolerance, "max relative error allowed");
    cmd->add_option("--seed", *seed, "model and batch seed");
    cmd->callback([=]() {
      auto make_batch = [&](const RnnConfig& cfg, uint64_t s) {
        Rng rng(s);
        std::vector<TrainSequence> batch;
        for (int k = 0; k < 4; ++k) {
          TrainSequence seq;
          const int len = 3 + static_cast<int>(rng.Below(4));
          for (int t = 0; t < len; ++t) {
            seq.inputs.push_back(
                static_cast<int32_t>(rng.Below(cfg.vocab_size)));
            seq.targets.push_back(
                static_cast<int32_t>(rng.Below(cfg.vocab_size)));
          }
          if (cfg.feat_dim > 0 && k % 2 == 0)
            for (int32_t d = 0; d < cfg.feat_dim; ++d)
              seq.feature.push_back(rng.Uniform(-1.0, 1.0));
          batch.push_back(std::move(seq));
        }
        return batch;
      };
      auto run = [&](const char* label, const RnnConfig& cfg) {
        RnnParams<double> p = InitRnn<double>(cfg, *seed);
        if (cfg.feat_dim > 0) {
          // Nonzero projection so its gradients are exercised.
          Rng rng(*seed + 1);
          VisitParamArrays(p, [&](const char* name, double* d, ptrdiff_t n) {
            if (name[0] != 'w' && name[0] != 'b') return;
            if (std::string(name) == "wh" || std::string(name) == "wc" ||
                std::string(name) == "bh" || std::string(name) == "bc")
              for (ptrdiff_t k = 0; k < n; ++k)
                d[k] = rng.Uniform(-0.3, 0.3);
          });
        }
        const double err = GradCheck(p, make_batch(cfg, *seed + 2), *epsilon);
        std::printf("%s max relative error %.3e\n", label, err);
        return err;
      };
      RnnConfig text_cfg;
      text_cfg.vocab_size = *vocab_size;
      text_cfg.embed_dim = *dim;
      text_cfg.hidden_dim = *dim;
      text_cfg.num_layers = *layers;
      double worst = run("text-only", text_cfg);
      if (*feat_dim > 0) {
        RnnConfig mm_cfg = text_cfg;
        mm_cfg.feat_dim = *feat_dim;
        worst = std::max(worst, run("with-projection", mm_cfg));
      }
      if (worst >= *tolerance) {
        std::ostringstream msg;
        msg << "gradient check failed: " << worst << " >= " << *tolerance;
        throw DataError(msg.str());
      }
    });
  }
}

}  // namespace cmdlm
