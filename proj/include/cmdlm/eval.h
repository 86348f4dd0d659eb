// eval.h
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
//
// Word error rate, fold aggregation, and McNemar significance testing.
// Word comparison is case-insensitive; commands carry no punctuation.

#ifndef CMDLM_EVAL_H_
#define CMDLM_EVAL_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cmdlm/types.h"

namespace cmdlm {

enum class EditOp { kMatch, kSubstitute, kDelete, kInsert };

// Minimum-edit-distance alignment with unit costs.  Ties prefer
// substitution over deletion over insertion, so the trace is unique.
// Throws DataError on an empty reference.
std::vector<EditOp> Align(const Command& ref, const Command& hyp);

struct WerResult {
  int64_t substitutions = 0;
  int64_t deletions = 0;
  int64_t insertions = 0;
  int64_t ref_words = 0;

  int64_t Edits() const { return substitutions + deletions + insertions; }
  // (S+D+I)/N; may exceed 1.
  double Wer() const;
};

WerResult ScorePair(const Command& ref, const Command& hyp);

// Pooled counts over all pairs, not a mean of per-utterance rates.
WerResult CorpusWer(
    const std::vector<std::pair<Command, Command>>& ref_hyp_pairs);

struct McNemarResult {
  int64_t b = 0;  // A wrong, B right
  int64_t c = 0;  // A right, B wrong
  double statistic = 0.0;  // continuity-corrected chi-square
  double p_value = 1.0;
  bool exact = false;  // binomial branch taken (b+c < 25)
  bool significant = false;  // p < 0.05
};

// Paired sentence-level test on two systems' per-utterance correctness.
// Small discordant counts use the exact two-sided binomial; larger ones the
// chi-square approximation with continuity correction.  Throws DataError on
// length mismatch.
McNemarResult McNemar(const std::vector<bool>& correct_a,
                      const std::vector<bool>& correct_b);

struct FoldAggregate {
  std::vector<double> values;
  double mean = 0.0;
  double spread = 0.0;  // two standard errors, sample sd
  bool degenerate = false;  // single fold, spread forced to 0
};

FoldAggregate AggregateFolds(const std::vector<double>& values);

// TSV `utt_id<TAB>text`, one utterance per line.  Ids must be unique.
std::vector<std::pair<std::string, Command>> ReadTranscriptFile(
    const std::string& path);
void WriteTranscriptFile(
    const std::string& path,
    const std::vector<std::pair<std::string, Command>>& entries);

// Joins hypothesis transcripts to references by utterance id.  The id sets
// must match exactly; pairs come back in reference order.
std::vector<std::pair<Command, Command>> PairTranscripts(
    const std::vector<std::pair<std::string, Command>>& ref,
    const std::vector<std::pair<std::string, Command>>& hyp);

}  // namespace cmdlm

#endif  // CMDLM_EVAL_H_
