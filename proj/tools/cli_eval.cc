// cli_eval.cc
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
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmdlm/eval.h"

namespace cmdlm {

namespace {

// Sentence-level exact match against the reference, case-insensitive.
std::vector<bool> CorrectFlags(
    const std::vector<std::pair<std::string, Command>>& ref,
    const std::vector<std::pair<std::string, Command>>& hyp) {
  std::vector<bool> flags;
  for (const auto& [r, h] : PairTranscripts(ref, hyp))
    flags.push_back(ScorePair(r, h).Edits() == 0);
  return flags;
}

}  // namespace

void RegisterEvalCli(CLI::App& app) {
  auto* eval = app.add_subcommand("eval", "error rates and significance");
  eval->require_subcommand(1);

  {
    auto* cmd = eval->add_subcommand("wer", "pooled corpus word error rate");
    auto ref_path = std::make_shared<std::string>();
    auto hyp_path = std::make_shared<std::string>();
    cmd->add_option("--ref", *ref_path, "reference utt_id<TAB>text")
        ->required();
    cmd->add_option("--hyp", *hyp_path, "hypothesis utt_id<TAB>text")
        ->required();
    cmd->callback([=]() {
      const auto ref = ReadTranscriptFile(*ref_path);
      const auto hyp = ReadTranscriptFile(*hyp_path);
      const WerResult r = CorpusWer(PairTranscripts(ref, hyp));
      std::printf("wer %.4f sub %lld del %lld ins %lld ref-words %lld\n",
                  r.Wer(), static_cast<long long>(r.substitutions),
                  static_cast<long long>(r.deletions),
                  static_cast<long long>(r.insertions),
                  static_cast<long long>(r.ref_words));
    });
  }

  {
    auto* cmd = eval->add_subcommand(
        "mcnemar", "paired sentence-correctness test for two systems");
    auto ref_path = std::make_shared<std::string>();
    auto a_path = std::make_shared<std::string>();
    auto b_path = std::make_shared<std::string>();
    cmd->add_option("--ref", *ref_path, "reference utt_id<TAB>text")
        ->required();
    cmd->add_option("--hyp-a", *a_path, "system A hypotheses")->required();
    cmd->add_option("--hyp-b", *b_path, "system B hypotheses")->required();
    cmd->callback([=]() {
      const auto ref = ReadTranscriptFile(*ref_path);
      const McNemarResult r =
          McNemar(CorrectFlags(ref, ReadTranscriptFile(*a_path)),
                  CorrectFlags(ref, ReadTranscriptFile(*b_path)));
      std::printf("b %lld c %lld statistic %.4f p %.6f (%s) %s\n",
                  static_cast<long long>(r.b), static_cast<long long>(r.c),
                  r.statistic, r.p_value,
                  r.exact ? "exact binomial" : "chi-square",
                  r.significant ? "significant at 0.05"
                                : "not significant at 0.05");
    });
  }

  {
    auto* cmd = eval->add_subcommand(
        "aggregate", "mean and two standard errors across folds");
    auto values = std::make_shared<std::vector<double>>();
    cmd->add_option("values", *values, "per-fold error rates")->required();
    cmd->callback([=]() {
      const FoldAggregate agg = AggregateFolds(*values);
      if (agg.degenerate)
        std::fprintf(stderr,
                     "warning: single fold, spread is not estimable\n");
      std::printf("mean %.4f spread %.4f folds %zu\n", agg.mean, agg.spread,
                  agg.values.size());
    });
  }
}

}  // namespace cmdlm
