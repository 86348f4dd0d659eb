// test_multimodal.cc
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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "cmdlm/multimodal.h"
#include "cmdlm/rnnlm.h"
#include "cmdlm/rng.h"
#include "doctest.h"
#include "lm_fixtures.h"

using namespace cmdlm;

namespace {

RnnLm<float> GroundedBase(uint64_t seed, int32_t dim = 16) {
  const std::vector<MmPair> pairs = GroundedPairs(64, 4, 1);
  RnnLm<float> lm;
  lm.vocab = Vocab::Build(PairCommands(pairs), 10000);
  RnnConfig cfg;
  cfg.vocab_size = lm.vocab.size();
  cfg.embed_dim = dim;
  cfg.hidden_dim = dim;
  cfg.num_layers = 1;
  lm.params = InitRnn<float>(cfg, seed);
  return lm;
}

TrainConfig GroundedTrainConfig(uint64_t seed) {
  TrainConfig tc;
  tc.learning_rate = 0.5;
  tc.epochs = 40;
  tc.batch_size = 16;
  tc.seed = seed;
  return tc;
}

}  // namespace

TEST_SUITE("multimodal") {

TEST_CASE("attaching an encoder leaves scores exactly unchanged") {
  RnnLm<float> base = GroundedBase(3);
  RnnLm<float> mm = AttachEncoder(base, 4, 99);
  const std::vector<double> zero(4, 0.0);
  const std::vector<double> value = {0.7, -0.3, 0.1, 0.9};
  const Command sentence = {"move", "left", "now"};
  const double text = SentenceLogProbLn(base, sentence);
  CHECK(MmScore(mm, sentence, zero) == text);
  CHECK(MmScore(mm, sentence, value) == text);  // projection still zero
  CHECK(SentenceLogProbLn(mm, sentence) == text);
}

TEST_CASE("attaching grows the parameter count by the projection size") {
  RnnLm<float> base = GroundedBase(4, 8);
  RnnLm<float> mm = AttachEncoder(base, 1, 0);
  const int32_t h = base.params.config.hidden_dim;
  CHECK(ParamCount(mm.params.config) ==
        ParamCount(base.params.config) + 2 * (1 * h + h));
}

TEST_CASE("attach is deterministic and validates its arguments") {
  RnnLm<float> base = GroundedBase(5);
  RnnLm<float> a = AttachEncoder(base, 3, 7);
  RnnLm<float> b = AttachEncoder(base, 3, 7);
  std::vector<float> va, vb;
  VisitParamArrays(a.params, [&](const char*, const float* d, ptrdiff_t n) {
    va.insert(va.end(), d, d + n);
  });
  VisitParamArrays(b.params, [&](const char*, const float* d, ptrdiff_t n) {
    vb.insert(vb.end(), d, d + n);
  });
  CHECK(va == vb);
  CHECK_THROWS_AS(AttachEncoder(base, 0, 7), DataError);
  CHECK_THROWS_AS(AttachEncoder(base, -2, 7), DataError);
  CHECK_THROWS_AS(AttachEncoder(a, 3, 7), DataError);  // already attached
}

TEST_CASE("conditional distributions stay normalized for every feature") {
  RnnLm<float> mm = AttachEncoder(GroundedBase(6), 4, 0);
  std::vector<MmPair> pairs = GroundedPairs(48, 4, 2);
  MmTrain(&mm, pairs, GroundedTrainConfig(6));
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int32_t> ctx = {Vocab::kBos};
    const int extra = static_cast<int>(rng.Below(3));
    for (int t = 0; t < extra; ++t)
      ctx.push_back(static_cast<int32_t>(rng.Below(mm.vocab.size())));
    std::vector<double> v(4);
    for (double& x : v) x = rng.Uniform(-2.0, 2.0);
    const double sum = NextDistribution(mm.params, ctx, v).sum();
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("gradients through the projection pass the finite-difference check") {
  RnnLm<double> mm = AttachEncoder(
      [] {
        RnnLm<double> base;
        const std::vector<MmPair> pairs = GroundedPairs(32, 3, 1);
        base.vocab = Vocab::Build(PairCommands(pairs), 10000);
        RnnConfig cfg;
        cfg.vocab_size = base.vocab.size();
        cfg.embed_dim = 6;
        cfg.hidden_dim = 6;
        cfg.num_layers = 2;
        base.params = InitRnn<double>(cfg, 17);
        return base;
      }(),
      3, 0);
  // Train briefly so the projection is nonzero and its gradients flow.
  std::vector<MmPair> pairs = GroundedPairs(32, 3, 4);
  TrainConfig tc = GroundedTrainConfig(8);
  tc.epochs = 6;
  MmTrain(&mm, pairs, tc);
  std::vector<TrainSequence> batch;
  for (int k = 0; k < 4; ++k)
    batch.push_back(MakeSequence(mm.vocab, pairs[k].command, pairs[k].feature));
  CHECK(GradCheck(mm.params, batch, 1e-4) < 1e-4);
}

TEST_CASE("the grounded task is learned from the feature") {
  // Train with true features; evaluation compares the probability of the
  // feature-consistent direction word against the inconsistent one.
  for (uint64_t seed = 1; seed <= 2; ++seed) {
    RnnLm<float> mm = AttachEncoder(GroundedBase(seed), 4, 0);
    std::vector<MmPair> train = GroundedPairs(200, 4, 100 + seed);
    std::vector<MmPair> held = GroundedPairs(100, 4, 200 + seed);
    MmTrain(&mm, train, GroundedTrainConfig(seed));

    int consistent = 0;
    for (const MmPair& pair : held) {
      Command flipped = pair.command;
      for (std::string& w : flipped)
        if (w == "left" || w == "right") w = w == "left" ? "right" : "left";
      const double true_score = MmScore(mm, pair.command, pair.feature);
      const double flip_score = MmScore(mm, flipped, pair.feature);
      if (true_score > flip_score) ++consistent;
    }
    CHECK(consistent >= 95);

    // Conditioning helps: true features beat zeroed features on held-out.
    const double cond = MmPerplexity(mm, held);
    const double uncond = MmPerplexity(mm, ZeroFeatures(held));
    CHECK(cond < uncond);
  }
}

TEST_CASE("all-zero features train like the text-only model") {
  // Mid-training the attached model runs ahead (the projection bias acts
  // as a learned initial state), so the comparison is made at
  // convergence, where both reach the same optimum.
  const std::vector<MmPair> train = GroundedPairs(120, 4, 300);
  const std::vector<MmPair> held = GroundedPairs(60, 4, 301);
  const uint64_t seed = 5;
  TrainConfig tc = GroundedTrainConfig(seed);
  tc.epochs = 80;

  RnnLm<float> text = GroundedBase(seed);
  TrainRnnLm(&text, PairCommands(train), tc);
  const double text_ppl = RnnPerplexity(text, PairCommands(held));

  RnnLm<float> mm = AttachEncoder(GroundedBase(seed), 4, 0);
  MmTrain(&mm, ZeroFeatures(train), tc);
  const double mm_ppl = MmPerplexity(mm, ZeroFeatures(held));

  CHECK(std::abs(mm_ppl - text_ppl) / text_ppl < 0.02);
}

TEST_CASE("learning rate zero leaves the attached model untouched") {
  RnnLm<float> mm = AttachEncoder(GroundedBase(7), 4, 0);
  std::vector<float> before;
  VisitParamArrays(mm.params, [&](const char*, const float* d, ptrdiff_t n) {
    before.insert(before.end(), d, d + n);
  });
  TrainConfig tc = GroundedTrainConfig(7);
  tc.learning_rate = 0.0;
  tc.epochs = 3;
  std::vector<MmPair> pairs = GroundedPairs(32, 4, 400);
  MmTrain(&mm, pairs, tc);
  std::vector<float> after;
  VisitParamArrays(mm.params, [&](const char*, const float* d, ptrdiff_t n) {
    after.insert(after.end(), d, d + n);
  });
  CHECK(before == after);
}

TEST_CASE("training on empty pairs is rejected") {
  RnnLm<float> mm = AttachEncoder(GroundedBase(8), 4, 0);
  TrainConfig tc;
  CHECK_THROWS_AS(MmTrain(&mm, {}, tc), DataError);
  CHECK_THROWS_AS(MmPerplexity(mm, {}), DataError);
}

TEST_CASE("attached models round trip through checkpoints") {
  const std::string path = "/tmp/cmdlm_test_mm.ck";
  RnnLm<float> mm = AttachEncoder(GroundedBase(9), 4, 0);
  std::vector<MmPair> pairs = GroundedPairs(48, 4, 500);
  TrainConfig tc = GroundedTrainConfig(9);
  tc.epochs = 10;
  MmTrain(&mm, pairs, tc);
  SaveRnnCheckpoint(path, mm);
  RnnLm<float> back = LoadRnnCheckpoint<float>(path);
  CHECK(back.params.config.feat_dim == 4);
  CHECK(MmScore(back, pairs[0].command, pairs[0].feature) ==
        MmScore(mm, pairs[0].command, pairs[0].feature));
  std::remove(path.c_str());
}

TEST_CASE("feature files round trip and reject malformed records") {
  const std::string path = "/tmp/cmdlm_test_feats.tsv";
  FeatureMap feats;
  feats["img_001"] = {0.5, -1.25, 3.0};
  feats["img_002"] = {0.0, 0.0, 0.125};
  WriteFeatureFile(path, feats);
  CHECK(ReadFeatureFile(path) == feats);

  auto write_and_read = [&](const std::string& contents) {
    std::ofstream os(path);
    os << contents;
    os.close();
    return ReadFeatureFile(path);
  };
  CHECK_THROWS_AS(write_and_read("img\t3\t0.1 0.2\n"), DataError);   // short
  CHECK_THROWS_AS(write_and_read("img\t2\t0.1 0.2 0.3\n"), DataError);
  CHECK_THROWS_AS(write_and_read("img\tx\t0.1\n"), DataError);       // bad dim
  CHECK_THROWS_AS(write_and_read("img\t1\tzap\n"), DataError);       // bad val
  CHECK_THROWS_AS(write_and_read("img 1 0.1\n"), DataError);         // no tabs
  CHECK_THROWS_AS(write_and_read("a\t1\t0.1\na\t1\t0.2\n"), DataError);
  CHECK_THROWS_AS(ReadFeatureFile("/tmp/no_such_feats.tsv"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("scoring validates the feature dimension") {
  RnnLm<float> mm = AttachEncoder(GroundedBase(10), 4, 0);
  CHECK_THROWS_AS(MmScore(mm, {"move", "left", "now"}, {0.1, 0.2}), DataError);
}

}  // TEST_SUITE
