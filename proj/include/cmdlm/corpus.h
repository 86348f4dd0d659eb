// corpus.h
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
// Seeded training-fold generation, train/eval overlap statistics, and
// noise mixing at a target SNR.

#ifndef CMDLM_CORPUS_H_
#define CMDLM_CORPUS_H_

#include <cstdint>
#include <vector>

#include "cmdlm/automaton.h"
#include "cmdlm/types.h"
#include "cmdlm/wav.h"

namespace cmdlm {

struct FoldSpec {
  std::vector<uint64_t> sizes;  // strictly increasing
  int folds_per_size = 5;
  uint64_t seed = 0;
};

struct Fold {
  uint64_t size = 0;
  int fold = 0;
  std::vector<Command> commands;
};

struct DatasetStats {
  uint64_t n = 0;
  uint64_t unique = 0;
  uint64_t overlap_count = 0;
  double overlap_proportion = 0.0;
};

// One seeded sample per (size, fold).  The per-fold seed depends only on
// (spec.seed, size, fold), so adding sizes or folds never changes the
// commands of existing cells.
std::vector<Fold> MakeFolds(const Automaton& a, const FoldSpec& spec,
                            SampleMode mode);

// unique counts distinct train commands; overlap counts eval commands
// (with multiplicity) that occur anywhere in train.
DatasetStats ComputeStats(const std::vector<Command>& train,
                          const std::vector<Command>& eval);

// output = clean + g * noise with g chosen so the components measure
// snr_db.  Noise shorter than clean is looped; longer noise is cropped
// from a seeded offset.
AudioClip MixNoise(const AudioClip& clean, const AudioClip& noise,
                   double snr_db, uint64_t seed);

}  // namespace cmdlm

#endif  // CMDLM_CORPUS_H_
