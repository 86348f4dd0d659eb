// lm_fixtures.h
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
// Shared corpus fixtures for language-model tests.

#ifndef CMDLM_TESTS_LM_FIXTURES_H_
#define CMDLM_TESTS_LM_FIXTURES_H_

#include <string>
#include <vector>

#include "cmdlm/multimodal.h"
#include "cmdlm/rng.h"
#include "cmdlm/types.h"

namespace cmdlm {

// A grounded toy task: the sign of feature[0] decides whether the command
// uses "left" or "right".  Everything else about the sentence is sampled
// independently of the feature, so the direction word is the only thing
// the projection can help predict.
inline std::vector<MmPair> GroundedPairs(int count, int feat_dim,
                                         uint64_t seed) {
  const std::vector<std::string> verbs = {"move", "turn", "drift", "slide"};
  const std::vector<std::string> suffixes = {"now", "slowly"};
  Rng rng(seed);
  std::vector<MmPair> pairs;
  pairs.reserve(count);
  for (int k = 0; k < count; ++k) {
    const bool left = rng.Below(2) == 0;
    MmPair pair;
    pair.command = {verbs[rng.Below(verbs.size())],
                    left ? "left" : "right",
                    suffixes[rng.Below(suffixes.size())]};
    pair.feature.assign(feat_dim, 0.0);
    pair.feature[0] = left ? 1.0 : -1.0;
    for (int d = 1; d < feat_dim; ++d)
      pair.feature[d] = rng.Uniform(-0.1, 0.1);
    pair.image_id = (left ? "left_" : "right_") + std::to_string(k);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// The same pairs with every feature zeroed, for unconditional baselines.
inline std::vector<MmPair> ZeroFeatures(std::vector<MmPair> pairs) {
  for (MmPair& pair : pairs)
    pair.feature.assign(pair.feature.size(), 0.0);
  return pairs;
}

inline std::vector<Command> PairCommands(const std::vector<MmPair>& pairs) {
  std::vector<Command> commands;
  commands.reserve(pairs.size());
  for (const MmPair& pair : pairs) commands.push_back(pair.command);
  return commands;
}

}  // namespace cmdlm

#endif  // CMDLM_TESTS_LM_FIXTURES_H_
