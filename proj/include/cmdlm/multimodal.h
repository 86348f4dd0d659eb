// multimodal.h
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
// Visual conditioning for the recurrent LM: a feature vector is projected
// into the first layer's initial hidden and cell states (tanh squashed),
// so the model estimates p(w_t | w_{1:t-1}, v).  The projection weights
// live inside RnnParams; this module adds the attach/train/score protocol
// and the feature-file plumbing.

#ifndef CMDLM_MULTIMODAL_H_
#define CMDLM_MULTIMODAL_H_

#include <map>
#include <string>
#include <vector>

#include "cmdlm/rnnlm.h"
#include "cmdlm/types.h"

namespace cmdlm {

// A sentence with the feature vector of its associated image.  An empty
// id marks a pair built without provenance (synthetic features).
struct MmPair {
  Command command;
  std::vector<double> feature;
  std::string image_id;
};

// Returns a copy of the base model extended with a zero-initialized
// feature projection, so the attached model scores exactly like the base
// until the projection is trained.  The seed is reserved for alternative
// initialization policies and does not affect the zero init.
template <typename Scalar>
RnnLm<Scalar> AttachEncoder(const RnnLm<Scalar>& base, int32_t feat_dim,
                            uint64_t seed);

// Natural-log probability of the sentence given the feature.
template <typename Scalar>
double MmScore(const RnnLm<Scalar>& lm, const Command& sentence,
               const std::vector<double>& feature);

// Joint training of base and projection parameters on paired data.
template <typename Scalar>
std::vector<double> MmTrain(RnnLm<Scalar>* lm, const std::vector<MmPair>& pairs,
                            const TrainConfig& tc);

template <typename Scalar>
std::vector<double> MmFinetune(RnnLm<Scalar>* lm,
                               const std::vector<MmPair>& pairs, int epochs,
                               TrainConfig tc);

// Conditional perplexity over paired data, end token counted.
template <typename Scalar>
double MmPerplexity(const RnnLm<Scalar>& lm, const std::vector<MmPair>& pairs);

// Feature file: one record per line, `id<TAB>d<TAB>v1 v2 ... vd`.
using FeatureMap = std::map<std::string, std::vector<double>>;
FeatureMap ReadFeatureFile(const std::string& path);
void WriteFeatureFile(const std::string& path, const FeatureMap& features);

// Pair file: `image_id<TAB>sentence` per line; the id NONE marks a
// command without an associated image.
struct PairRow {
  std::string image_id;
  Command command;
};
std::vector<PairRow> ReadPairRows(const std::string& path);
void WritePairRows(const std::string& path, const std::vector<PairRow>& rows);

// Looks up each row's feature vector.  NONE rows get a zero vector.  A
// missing id throws when strict, otherwise gets a zero vector and is
// appended to *missing for the caller to report.
std::vector<MmPair> ResolvePairs(const std::vector<PairRow>& rows,
                                 const FeatureMap& features, int32_t feat_dim,
                                 bool strict,
                                 std::vector<std::string>* missing = nullptr);

}  // namespace cmdlm

#endif  // CMDLM_MULTIMODAL_H_
