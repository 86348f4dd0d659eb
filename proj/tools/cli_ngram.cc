// cli_ngram.cc
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
#include "cmdlm/ngram.h"

namespace cmdlm {

void RegisterNgramCli(CLI::App& app) {
  auto* ngram = app.add_subcommand("ngram", "backoff n-gram language models");
  ngram->require_subcommand(1);

  {
    auto* cmd = ngram->add_subcommand("train", "estimate a model from text");
    auto corpus = std::make_shared<std::string>();
    auto order = std::make_shared<int>(4);
    auto smoothing = std::make_shared<std::string>("witten-bell");
    auto vocab_path = std::make_shared<std::string>();
    auto vocab_cap = std::make_shared<uint64_t>(10000);
    auto write_vocab = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--corpus", *corpus, "training text, one sentence per line")
        ->required();
    cmd->add_option("--order", *order, "model order (1..4)");
    cmd->add_option("--smoothing", *smoothing, "witten-bell or kneser-ney");
    cmd->add_option("--vocab", *vocab_path,
                    "fixed vocabulary file (default: built from the corpus)");
    cmd->add_option("--vocab-cap", *vocab_cap, "vocabulary size cap");
    cmd->add_option("--write-vocab", *write_vocab, "save the vocabulary here");
    cmd->add_option("--out", *out, "output ARPA path")->required();
    cmd->callback([=]() {
      std::vector<Command> text = ReadCommandFile(*corpus);
      Vocab vocab = vocab_path->empty() ? Vocab::Build(text, *vocab_cap)
                                        : Vocab::LoadFile(*vocab_path);
      NGramModel m = TrainNGram(text, *order, vocab, ParseSmoothing(*smoothing));
      ArpaWriteFile(*out, m);
      if (!write_vocab->empty()) vocab.SaveFile(*write_vocab);
      std::cout << "ngrams " << m.TotalNGrams() << " vocab " << vocab.size()
                << "\n";
    });
  }

  {
    auto* cmd = ngram->add_subcommand(
        "interpolate", "combine a domain and a generic model at query time");
    auto domain = std::make_shared<std::string>();
    auto generic = std::make_shared<std::string>();
    auto lambda = std::make_shared<double>(0.9);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--domain", *domain, "domain ARPA model")->required();
    cmd->add_option("--generic", *generic, "generic ARPA model")->required();
    cmd->add_option("--lambda", *lambda, "domain model weight");
    cmd->add_option("--out", *out, "output mixture spec")->required();
    cmd->callback([=]() {
      // Validate both components before committing the spec to disk.
      auto dom = std::make_shared<const NGramModel>(ArpaReadFile(*domain));
      auto gen = std::make_shared<const NGramModel>(ArpaReadFile(*generic));
      Interpolate(dom, gen, *lambda);
      WriteMixtureFile(*out, *domain, *generic, *lambda);
      std::cout << "lambda " << *lambda << "\n";
    });
  }

  {
    auto* cmd = ngram->add_subcommand("prune", "count-cutoff pruning");
    auto model = std::make_shared<std::string>();
    auto max_ngrams = std::make_shared<uint64_t>(0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "input ARPA model")->required();
    cmd->add_option("--max-ngrams", *max_ngrams, "total n-gram budget")
        ->required();
    cmd->add_option("--out", *out, "output ARPA path")->required();
    cmd->callback([=]() {
      NGramModel pruned = Prune(ArpaReadFile(*model), *max_ngrams);
      ArpaWriteFile(*out, pruned);
      std::cout << "ngrams " << pruned.TotalNGrams() << "\n";
    });
  }

  {
    auto* cmd = ngram->add_subcommand("ppl", "corpus perplexity");
    auto model = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "ARPA model or mixture spec")
        ->required();
    cmd->add_option("--corpus", *corpus, "text, one sentence per line")
        ->required();
    cmd->callback([=]() {
      auto m = LoadModelFile(*model);
      std::printf("%.6f\n", Perplexity(*m, ReadCommandFile(*corpus)));
    });
  }

  {
    auto* cmd = ngram->add_subcommand("score", "per-sentence log10 probability");
    auto model = std::make_shared<std::string>();
    auto input = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "ARPA model or mixture spec")
        ->required();
    cmd->add_option("--input", *input, "text, one sentence per line")
        ->required();
    cmd->callback([=]() {
      auto m = LoadModelFile(*model);
      for (const Command& c : ReadCommandFile(*input)) {
        std::printf("%.6f\t%s\n", SentenceLogProb10(*m, c), JoinWords(c).c_str());
      }
    });
  }
}

}  // namespace cmdlm
