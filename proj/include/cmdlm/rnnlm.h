// rnnlm.h
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
// Recurrent language model: stacked LSTM layers with tied input/output
// embeddings, truncated BPTT training with gradient clipping, gradient
// verification against finite differences, and a binary checkpoint format.
//
// The numeric core is templated on the scalar type: float for training,
// double for gradient checks.  All probabilities here are natural log.
// An optional feature projection (the multi-modal encoder hookup) maps an
// external feature vector into the first layer's initial hidden and cell
// states; text-only models have feat_dim 0 and start from zero states.

#ifndef CMDLM_RNNLM_H_
#define CMDLM_RNNLM_H_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "cmdlm/rng.h"
#include "cmdlm/types.h"
#include "cmdlm/vocab.h"

namespace cmdlm {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct RnnConfig {
  int32_t vocab_size = 0;
  int32_t embed_dim = 0;
  int32_t hidden_dim = 0;
  int32_t num_layers = 0;
  double dropout = 0.0;
  bool tied = true;
  int32_t feat_dim = 0;  // 0 means text-only

  void Validate() const;
};

uint64_t ParamCount(const RnnConfig& cfg);

// Gate blocks are stacked [input; forget; cell; output], so w is
// 4H x (in_dim + H) and acts on the concatenation [x; h_prev].
template <typename Scalar>
struct RnnParams {
  RnnConfig config;
  MatX<Scalar> embedding;      // E x V, column per word
  std::vector<MatX<Scalar>> w;
  std::vector<VecX<Scalar>> b;
  MatX<Scalar> out_proj;       // V x H, untied models only
  VecX<Scalar> out_bias;       // V
  MatX<Scalar> wh, wc;         // H x feat_dim
  VecX<Scalar> bh, bc;         // H

  template <typename Other>
  RnnParams<Other> Cast() const;
};

// Visits every parameter array as (name, data pointer, length) in a fixed
// order shared by initialization, checkpoints, optimizers and clipping.
template <typename Scalar, typename F>
void VisitParamArrays(RnnParams<Scalar>& p, F&& f) {
  f("embedding", p.embedding.data(), p.embedding.size());
  for (size_t l = 0; l < p.w.size(); ++l) {
    f("w", p.w[l].data(), p.w[l].size());
    f("b", p.b[l].data(), p.b[l].size());
  }
  if (!p.config.tied) f("out_proj", p.out_proj.data(), p.out_proj.size());
  f("out_bias", p.out_bias.data(), p.out_bias.size());
  if (p.config.feat_dim > 0) {
    f("wh", p.wh.data(), p.wh.size());
    f("bh", p.bh.data(), p.bh.size());
    f("wc", p.wc.data(), p.wc.size());
    f("bc", p.bc.data(), p.bc.size());
  }
}

template <typename Scalar, typename F>
void VisitParamArrays(const RnnParams<Scalar>& p, F&& f) {
  VisitParamArrays(const_cast<RnnParams<Scalar>&>(p),
                   [&](const char* name, Scalar* data, ptrdiff_t n) {
                     f(name, static_cast<const Scalar*>(data), n);
                   });
}

// Allocates zeroed parameter arrays of the configured shapes.
template <typename Scalar>
RnnParams<Scalar> ZeroRnn(const RnnConfig& cfg);

// Uniform [-0.05, 0.05] init except the forget-gate biases, which start
// at one.  Deterministic in the seed, independent of the scalar type.
template <typename Scalar>
RnnParams<Scalar> InitRnn(const RnnConfig& cfg, uint64_t seed);

// One training example: inputs and targets of equal length, plus an
// optional feature vector (empty = absent) for the projection.
struct TrainSequence {
  std::vector<int32_t> inputs;
  std::vector<int32_t> targets;
  std::vector<double> feature;
};

// Natural-log probability of the targets given the inputs.
template <typename Scalar>
double SequenceLogProb(const RnnParams<Scalar>& p, const TrainSequence& seq);

// Distribution over the next word after consuming inputs, accumulated in
// double so it sums to one at full precision.
template <typename Scalar>
Eigen::VectorXd NextDistribution(const RnnParams<Scalar>& p,
                                 const std::vector<int32_t>& inputs,
                                 const std::vector<double>& feature);

// Mean negative log likelihood per target token, dropout disabled.
template <typename Scalar>
double BatchLoss(const RnnParams<Scalar>& p,
                 const std::vector<TrainSequence>& batch);

// Gradients of BatchLoss in a parameter-shaped container.  truncation
// bounds how far back in time gradients flow (0 = unbounded); a non-null
// dropout_rng enables dropout on the non-recurrent connections.
template <typename Scalar>
RnnParams<Scalar> ComputeGradients(const RnnParams<Scalar>& p,
                                   const std::vector<TrainSequence>& batch,
                                   int truncation, Rng* dropout_rng,
                                   double* loss_out);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 10;
  int batch_size = 16;
  int truncation = 0;  // 0: whole sentence
  double clip_norm = 5.0;
  uint64_t seed = 0;
  std::string optimizer = "sgd";  // or "adam"

  void Validate() const;
};

// In-place training; returns the per-epoch mean token loss.  Throws
// DivergenceError when the loss stops being finite.
template <typename Scalar>
std::vector<double> TrainRnn(RnnParams<Scalar>* p,
                             const std::vector<TrainSequence>& data,
                             const TrainConfig& tc);

// Max relative error between analytic and central-difference gradients
// over every coordinate (or a deterministic sample above sample_cap).
double GradCheck(const RnnParams<double>& p,
                 const std::vector<TrainSequence>& batch, double epsilon,
                 size_t sample_cap = 20000);

// A vocabulary-bound model, the unit of training and checkpointing.
template <typename Scalar>
struct RnnLm {
  RnnParams<Scalar> params;
  Vocab vocab;
};

// inputs = <s> + words, targets = words + </s>, OOV mapped to <unk>.
TrainSequence MakeSequence(const Vocab& vocab, const Command& sentence,
                           const std::vector<double>& feature = {});

template <typename Scalar>
double SentenceLogProbLn(const RnnLm<Scalar>& lm, const Command& sentence,
                         const std::vector<double>& feature = {});

template <typename Scalar>
double RnnPerplexity(const RnnLm<Scalar>& lm,
                     const std::vector<Command>& corpus);

template <typename Scalar>
std::vector<double> TrainRnnLm(RnnLm<Scalar>* lm,
                               const std::vector<Command>& corpus,
                               const TrainConfig& tc);

// Same loop as TrainRnnLm with the epoch count taken from the adaptation
// schedule; kept separate so call sites read like the protocol.
template <typename Scalar>
std::vector<double> FinetuneRnnLm(RnnLm<Scalar>* lm,
                                  const std::vector<Command>& corpus,
                                  int epochs, TrainConfig tc);

// Binary checkpoint: magic, version, config, vocab, parameter arrays as
// little-endian 32-bit floats in VisitParamArrays order.
template <typename Scalar>
void SaveRnnCheckpoint(const std::string& path, const RnnLm<Scalar>& lm);
template <typename Scalar>
RnnLm<Scalar> LoadRnnCheckpoint(const std::string& path);

}  // namespace cmdlm

#endif  // CMDLM_RNNLM_H_
