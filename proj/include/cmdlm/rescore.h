// rescore.h
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
// Second-pass reordering of n-best lists under a log-linear combination of
// first-pass scores, a language model and a word insertion penalty.

#ifndef CMDLM_RESCORE_H_
#define CMDLM_RESCORE_H_

#include <functional>

#include "cmdlm/nbest.h"
#include "cmdlm/types.h"

namespace cmdlm {

// Natural-log sentence probability under some language model.
using SentenceScorer = std::function<double(const Command&)>;

struct RescoreConfig {
  double lm_weight = 1.0;
  double word_insertion_penalty = 0.0;
  bool replace_firstpass_lm = false;

  void Validate() const;  // finite values, lm_weight >= 0
};

// acoustic (+ first-pass LM unless replaced) + lm_weight * lm
// + word_insertion_penalty * |words|.
double CombinedScore(const Hypothesis& h, double lm_logprob,
                     const RescoreConfig& cfg);

// Stable sort of the hypotheses by descending combined score.  The result
// holds the same hypotheses; equal scores keep their input order.  Throws
// DataError on an empty list.
NBestList Rescore(const NBestList& nb, const SentenceScorer& scorer,
                  const RescoreConfig& cfg);

// Top hypothesis text.  Throws DataError on an empty list.
const Command& OneBest(const NBestList& nb);

}  // namespace cmdlm

#endif  // CMDLM_RESCORE_H_
