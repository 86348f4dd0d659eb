// rescore.cc
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

#include "cmdlm/rescore.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cmdlm {

void RescoreConfig::Validate() const {
  if (!std::isfinite(lm_weight) || !std::isfinite(word_insertion_penalty))
    throw DataError("rescore weights must be finite");
  if (lm_weight < 0.0) throw DataError("lm weight must be nonnegative");
}

double CombinedScore(const Hypothesis& h, double lm_logprob,
                     const RescoreConfig& cfg) {
  const double firstpass = cfg.replace_firstpass_lm ? h.acoustic_logscore
                                                    : FirstpassCombined(h);
  return firstpass + cfg.lm_weight * lm_logprob +
         cfg.word_insertion_penalty * static_cast<double>(h.text.size());
}

NBestList Rescore(const NBestList& nb, const SentenceScorer& scorer,
                  const RescoreConfig& cfg) {
  cfg.Validate();
  if (nb.hyps.empty())
    throw DataError("cannot rescore empty n-best list for utterance '" +
                    nb.utt_id + "'");
  std::vector<double> combined(nb.hyps.size());
  for (size_t i = 0; i < nb.hyps.size(); ++i)
    combined[i] = CombinedScore(nb.hyps[i], scorer(nb.hyps[i].text), cfg);

  std::vector<size_t> order(nb.hyps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return combined[a] > combined[b];
  });

  NBestList out;
  out.utt_id = nb.utt_id;
  out.reference = nb.reference;
  out.image_id = nb.image_id;
  out.hyps.reserve(nb.hyps.size());
  for (size_t i : order) out.hyps.push_back(nb.hyps[i]);
  return out;
}

const Command& OneBest(const NBestList& nb) {
  if (nb.hyps.empty())
    throw DataError("empty n-best list for utterance '" + nb.utt_id + "'");
  return nb.hyps.front().text;
}

}  // namespace cmdlm
