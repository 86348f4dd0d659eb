// corpus.cc
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

#include "cmdlm/corpus.h"

#include <cmath>
#include <set>

#include "cmdlm/rng.h"

namespace cmdlm {

std::vector<Fold> MakeFolds(const Automaton& a, const FoldSpec& spec,
                            SampleMode mode) {
  if (spec.sizes.empty()) throw DataError("fold spec has no sizes");
  for (size_t i = 1; i < spec.sizes.size(); ++i) {
    if (spec.sizes[i] <= spec.sizes[i - 1]) {
      throw DataError("fold sizes must be strictly increasing");
    }
  }
  if (spec.folds_per_size < 1) {
    throw DataError("folds_per_size must be at least 1");
  }

  std::vector<Fold> out;
  out.reserve(spec.sizes.size() * static_cast<size_t>(spec.folds_per_size));
  for (uint64_t size : spec.sizes) {
    for (int fold = 0; fold < spec.folds_per_size; ++fold) {
      const uint64_t seed =
          DeriveSeed(spec.seed, {size, static_cast<uint64_t>(fold)});
      out.push_back({size, fold, Sample(a, size, seed, mode)});
    }
  }
  return out;
}

DatasetStats ComputeStats(const std::vector<Command>& train,
                          const std::vector<Command>& eval) {
  if (train.empty()) throw DataError("stats: empty train set");
  if (eval.empty()) throw DataError("stats: empty eval set");
  std::set<Command> distinct(train.begin(), train.end());
  DatasetStats stats;
  stats.n = train.size();
  stats.unique = distinct.size();
  for (const Command& c : eval) {
    if (distinct.count(c)) ++stats.overlap_count;
  }
  stats.overlap_proportion =
      static_cast<double>(stats.overlap_count) / static_cast<double>(eval.size());
  return stats;
}

namespace {

double MeanPower(const std::vector<double>& samples) {
  double sum = 0.0;
  for (double x : samples) sum += x * x;
  return sum / static_cast<double>(samples.size());
}

}  // namespace

AudioClip MixNoise(const AudioClip& clean, const AudioClip& noise,
                   double snr_db, uint64_t seed) {
  if (clean.samples.empty()) throw DataError("mix_noise: empty clean clip");
  if (noise.samples.empty()) throw DataError("mix_noise: empty noise clip");
  if (clean.sample_rate != noise.sample_rate) {
    throw DataError("mix_noise: sample rates differ");
  }

  const size_t n = clean.samples.size();
  std::vector<double> segment(n);
  if (noise.samples.size() >= n) {
    Rng rng(DeriveSeed(seed, {HashString("noise-offset")}));
    const size_t offset = rng.Below(noise.samples.size() - n + 1);
    for (size_t i = 0; i < n; ++i) segment[i] = noise.samples[offset + i];
  } else {
    for (size_t i = 0; i < n; ++i) {
      segment[i] = noise.samples[i % noise.samples.size()];
    }
  }

  const double p_clean = MeanPower(clean.samples);
  const double p_noise = MeanPower(segment);
  if (p_clean <= 0.0) throw DataError("mix_noise: clean signal has zero power");
  if (p_noise <= 0.0) throw DataError("mix_noise: noise segment has zero power");

  const double g = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  AudioClip out;
  out.sample_rate = clean.sample_rate;
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.samples[i] = clean.samples[i] + g * segment[i];
  }
  return out;
}

}  // namespace cmdlm
