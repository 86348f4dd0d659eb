// rnnlm.cc
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

#include "cmdlm/rnnlm.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace cmdlm {

void RnnConfig::Validate() const {
  if (vocab_size < 1) throw DataError("rnn config: vocab_size must be >= 1");
  if (embed_dim < 1) throw DataError("rnn config: embed_dim must be >= 1");
  if (hidden_dim < 1) throw DataError("rnn config: hidden_dim must be >= 1");
  if (num_layers < 1) throw DataError("rnn config: num_layers must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw DataError("rnn config: dropout must be in [0, 1)");
  if (feat_dim < 0) throw DataError("rnn config: feat_dim must be >= 0");
  if (tied && embed_dim != hidden_dim)
    throw DataError(
        "rnn config: tied embeddings require embed_dim == hidden_dim");
}

uint64_t ParamCount(const RnnConfig& cfg) {
  const uint64_t v = cfg.vocab_size, e = cfg.embed_dim, h = cfg.hidden_dim;
  uint64_t count = v * e;
  for (int32_t l = 0; l < cfg.num_layers; ++l) {
    const uint64_t in = l == 0 ? e : h;
    count += 4 * (h * (in + h) + h);
  }
  if (!cfg.tied) count += v * h;
  count += v;
  if (cfg.feat_dim > 0) count += 2 * (h * cfg.feat_dim + h);
  return count;
}

template <typename Scalar>
template <typename Other>
RnnParams<Other> RnnParams<Scalar>::Cast() const {
  RnnParams<Other> out;
  out.config = config;
  out.embedding = embedding.template cast<Other>();
  for (const auto& m : w) out.w.push_back(m.template cast<Other>());
  for (const auto& v : b) out.b.push_back(v.template cast<Other>());
  out.out_proj = out_proj.template cast<Other>();
  out.out_bias = out_bias.template cast<Other>();
  out.wh = wh.template cast<Other>();
  out.wc = wc.template cast<Other>();
  out.bh = bh.template cast<Other>();
  out.bc = bc.template cast<Other>();
  return out;
}

template <typename Scalar>
RnnParams<Scalar> ZeroRnn(const RnnConfig& cfg) {
  cfg.Validate();
  const int32_t v = cfg.vocab_size, e = cfg.embed_dim, h = cfg.hidden_dim;
  RnnParams<Scalar> p;
  p.config = cfg;
  p.embedding = MatX<Scalar>::Zero(e, v);
  for (int32_t l = 0; l < cfg.num_layers; ++l) {
    const int32_t in = l == 0 ? e : h;
    p.w.push_back(MatX<Scalar>::Zero(4 * h, in + h));
    p.b.push_back(VecX<Scalar>::Zero(4 * h));
  }
  if (!cfg.tied) p.out_proj = MatX<Scalar>::Zero(v, h);
  p.out_bias = VecX<Scalar>::Zero(v);
  if (cfg.feat_dim > 0) {
    p.wh = MatX<Scalar>::Zero(h, cfg.feat_dim);
    p.wc = MatX<Scalar>::Zero(h, cfg.feat_dim);
    p.bh = VecX<Scalar>::Zero(h);
    p.bc = VecX<Scalar>::Zero(h);
  }
  return p;
}

template <typename Scalar>
RnnParams<Scalar> InitRnn(const RnnConfig& cfg, uint64_t seed) {
  RnnParams<Scalar> p = ZeroRnn<Scalar>(cfg);
  Rng rng(seed);
  // Draws happen in double so float and double models agree to rounding.
  // The feature projection stays at zero: a freshly attached encoder must
  // leave the text model's scores untouched.
  VisitParamArrays(p, [&](const char* name, Scalar* data, ptrdiff_t n) {
    if (std::strcmp(name, "wh") == 0 || std::strcmp(name, "bh") == 0 ||
        std::strcmp(name, "wc") == 0 || std::strcmp(name, "bc") == 0)
      return;
    for (ptrdiff_t k = 0; k < n; ++k)
      data[k] = static_cast<Scalar>(rng.Uniform(-0.05, 0.05));
  });
  const int32_t h = cfg.hidden_dim;
  for (auto& b : p.b) b.segment(h, h).setOnes();
  return p;
}

namespace {

// Per-step activations kept for backprop.
template <typename Scalar>
struct StepCache {
  VecX<Scalar> xh;                // layer input concat [x; h_prev], post-dropout
  VecX<Scalar> in_mask;           // dropout mask on x, empty when disabled
  VecX<Scalar> i, f, g, o, c, tc; // gates, cell, tanh(cell)
  VecX<Scalar> h;
};

template <typename Scalar>
struct ForwardCache {
  std::vector<std::vector<StepCache<Scalar>>> steps;  // [t][l]
  std::vector<VecX<Scalar>> top_mask;                 // pre-softmax dropout
  std::vector<VecX<Scalar>> top_dropped;
  std::vector<Eigen::VectorXd> logits;
  std::vector<double> lse;  // log sum exp per step
  VecX<Scalar> h0, c0;      // layer-0 initial state
  VecX<Scalar> feat;
  bool has_feature = false;
};

template <typename Scalar>
VecX<Scalar> Sigmoid(const VecX<Scalar>& a) {
  return (Scalar(1) / (Scalar(1) + (-a.array()).exp())).matrix();
}

template <typename Scalar>
VecX<Scalar> DropoutMask(int32_t n, double rate, Rng* rng) {
  VecX<Scalar> mask(n);
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  for (int32_t k = 0; k < n; ++k)
    mask[k] = rng->Uniform() < rate ? Scalar(0) : keep_scale;
  return mask;
}

template <typename Scalar>
void ForwardPass(const RnnParams<Scalar>& p, const std::vector<int32_t>& inputs,
                 const std::vector<double>& feature, Rng* dropout_rng,
                 ForwardCache<Scalar>* cache) {
  const RnnConfig& cfg = p.config;
  const int32_t h = cfg.hidden_dim, e = cfg.embed_dim, layers = cfg.num_layers;
  const int T = static_cast<int>(inputs.size());
  const bool drop = dropout_rng != nullptr && cfg.dropout > 0.0;

  if (!feature.empty()) {
    if (cfg.feat_dim == 0)
      throw DataError("model has no feature projection but a feature was given");
    if (static_cast<int32_t>(feature.size()) != cfg.feat_dim) {
      std::ostringstream msg;
      msg << "feature dimension " << feature.size() << " does not match model "
          << cfg.feat_dim;
      throw DataError(msg.str());
    }
    cache->has_feature = true;
    cache->feat = Eigen::Map<const Eigen::VectorXd>(feature.data(),
                                                    feature.size())
                      .cast<Scalar>();
    cache->h0 = (p.wh * cache->feat + p.bh).array().tanh().matrix();
    cache->c0 = (p.wc * cache->feat + p.bc).array().tanh().matrix();
  } else {
    cache->h0 = VecX<Scalar>::Zero(h);
    cache->c0 = VecX<Scalar>::Zero(h);
  }

  cache->steps.assign(T, {});
  cache->top_mask.assign(T, {});
  cache->top_dropped.assign(T, {});
  cache->logits.assign(T, {});
  cache->lse.assign(T, 0.0);

  const VecX<Scalar> zero = VecX<Scalar>::Zero(h);
  for (int t = 0; t < T; ++t) {
    const int32_t word = inputs[t];
    if (word < 0 || word >= cfg.vocab_size)
      throw DataError("input token id out of range");
    VecX<Scalar> x = p.embedding.col(word);
    auto& row = cache->steps[t];
    row.resize(layers);
    for (int32_t l = 0; l < layers; ++l) {
      StepCache<Scalar>& sc = row[l];
      const int32_t in = l == 0 ? e : h;
      if (drop) {
        sc.in_mask = DropoutMask<Scalar>(in, cfg.dropout, dropout_rng);
        x = x.cwiseProduct(sc.in_mask);
      }
      const VecX<Scalar>& h_prev =
          t > 0 ? cache->steps[t - 1][l].h : (l == 0 ? cache->h0 : zero);
      const VecX<Scalar>& c_prev =
          t > 0 ? cache->steps[t - 1][l].c : (l == 0 ? cache->c0 : zero);
      sc.xh.resize(in + h);
      sc.xh.head(in) = x;
      sc.xh.tail(h) = h_prev;
      VecX<Scalar> a = p.w[l] * sc.xh + p.b[l];
      sc.i = Sigmoid<Scalar>(a.head(h));
      sc.f = Sigmoid<Scalar>(a.segment(h, h));
      sc.g = a.segment(2 * h, h).array().tanh().matrix();
      sc.o = Sigmoid<Scalar>(a.tail(h));
      sc.c = sc.f.cwiseProduct(c_prev) + sc.i.cwiseProduct(sc.g);
      sc.tc = sc.c.array().tanh().matrix();
      sc.h = sc.o.cwiseProduct(sc.tc);
      x = sc.h;
    }
    VecX<Scalar> top = row[layers - 1].h;
    if (drop) {
      cache->top_mask[t] = DropoutMask<Scalar>(h, cfg.dropout, dropout_rng);
      top = top.cwiseProduct(cache->top_mask[t]);
    }
    cache->top_dropped[t] = top;
    // Logits and the normalizer in double so distributions sum to one at
    // full precision regardless of the training scalar.
    const VecX<Scalar> raw =
        cfg.tied ? VecX<Scalar>(p.embedding.transpose() * top)
                 : VecX<Scalar>(p.out_proj * top);
    Eigen::VectorXd logits = raw.template cast<double>();
    logits += p.out_bias.template cast<double>();
    const double m = logits.maxCoeff();
    cache->lse[t] = m + std::log((logits.array() - m).exp().sum());
    cache->logits[t] = std::move(logits);
  }
}

// Sum of -log p(target) over the sequence, natural log.
template <typename Scalar>
double CacheLossSum(const ForwardCache<Scalar>& cache,
                    const std::vector<int32_t>& targets) {
  double sum = 0.0;
  for (size_t t = 0; t < targets.size(); ++t) {
    const int32_t y = targets[t];
    if (y < 0 || y >= cache.logits[t].size())
      throw DataError("target token id out of range");
    sum += cache.lse[t] - cache.logits[t][y];
  }
  return sum;
}

// Accumulates the gradient of the summed loss into *grads.  A positive
// truncation cuts gradient flow at every multiple of that many steps.
template <typename Scalar>
void BackwardPass(const RnnParams<Scalar>& p, const TrainSequence& seq,
                  const ForwardCache<Scalar>& cache, int truncation,
                  RnnParams<Scalar>* grads) {
  const RnnConfig& cfg = p.config;
  const int32_t h = cfg.hidden_dim, e = cfg.embed_dim, layers = cfg.num_layers;
  const int T = static_cast<int>(seq.inputs.size());

  std::vector<VecX<Scalar>> dh_next(layers, VecX<Scalar>::Zero(h));
  std::vector<VecX<Scalar>> dc_next(layers, VecX<Scalar>::Zero(h));
  const VecX<Scalar> zero = VecX<Scalar>::Zero(h);

  for (int t = T - 1; t >= 0; --t) {
    if (truncation > 0 && (t + 1) % truncation == 0) {
      for (auto& v : dh_next) v.setZero();
      for (auto& v : dc_next) v.setZero();
    }
    Eigen::VectorXd probs =
        (cache.logits[t].array() - cache.lse[t]).exp().matrix();
    probs[seq.targets[t]] -= 1.0;
    const VecX<Scalar> dlogits = probs.cast<Scalar>();
    grads->out_bias += dlogits;
    VecX<Scalar> dtop;
    if (cfg.tied) {
      grads->embedding += cache.top_dropped[t] * dlogits.transpose();
      dtop = p.embedding * dlogits;
    } else {
      grads->out_proj += dlogits * cache.top_dropped[t].transpose();
      dtop = p.out_proj.transpose() * dlogits;
    }
    if (cache.top_mask[t].size() > 0)
      dtop = dtop.cwiseProduct(cache.top_mask[t]);

    VecX<Scalar> dabove = dtop;  // gradient into h of the current layer at t
    for (int32_t l = layers - 1; l >= 0; --l) {
      const StepCache<Scalar>& sc = cache.steps[t][l];
      const int32_t in = l == 0 ? e : h;
      const VecX<Scalar> dh = dh_next[l] + dabove;
      const VecX<Scalar>& c_prev =
          t > 0 ? cache.steps[t - 1][l].c : (l == 0 ? cache.c0 : zero);
      const VecX<Scalar> dc =
          dc_next[l] + (dh.array() * sc.o.array() *
                        (Scalar(1) - sc.tc.array().square()))
                           .matrix();
      VecX<Scalar> da(4 * h);
      da.head(h) = (dc.array() * sc.g.array() * sc.i.array() *
                    (Scalar(1) - sc.i.array()))
                       .matrix();
      da.segment(h, h) = (dc.array() * c_prev.array() * sc.f.array() *
                          (Scalar(1) - sc.f.array()))
                             .matrix();
      da.segment(2 * h, h) =
          (dc.array() * sc.i.array() * (Scalar(1) - sc.g.array().square()))
              .matrix();
      da.tail(h) = (dh.array() * sc.tc.array() * sc.o.array() *
                    (Scalar(1) - sc.o.array()))
                       .matrix();
      grads->w[l] += da * sc.xh.transpose();
      grads->b[l] += da;
      const VecX<Scalar> dxh = p.w[l].transpose() * da;
      dh_next[l] = dxh.tail(h);
      dc_next[l] = dc.cwiseProduct(sc.f);
      VecX<Scalar> dx = dxh.head(in);
      if (sc.in_mask.size() > 0) dx = dx.cwiseProduct(sc.in_mask);
      if (l > 0) {
        dabove = dx;
      } else {
        grads->embedding.col(seq.inputs[t]) += dx;
      }
    }
  }

  if (cache.has_feature) {
    // After the t = 0 step, dh_next/dc_next for layer 0 are the gradients
    // into the projected initial state.
    const VecX<Scalar> dzh =
        (dh_next[0].array() * (Scalar(1) - cache.h0.array().square()))
            .matrix();
    const VecX<Scalar> dzc =
        (dc_next[0].array() * (Scalar(1) - cache.c0.array().square()))
            .matrix();
    grads->wh += dzh * cache.feat.transpose();
    grads->bh += dzh;
    grads->wc += dzc * cache.feat.transpose();
    grads->bc += dzc;
  }
}

template <typename Scalar>
void CheckSequence(const RnnConfig& cfg, const TrainSequence& seq) {
  if (seq.inputs.empty())
    throw DataError("training sequence must not be empty");
  if (seq.inputs.size() != seq.targets.size())
    throw DataError("sequence inputs and targets differ in length");
  if (!seq.feature.empty() &&
      static_cast<int32_t>(seq.feature.size()) != cfg.feat_dim)
    throw DataError("sequence feature dimension does not match model");
}

template <typename Scalar>
size_t TokenCount(const std::vector<TrainSequence>& batch) {
  size_t n = 0;
  for (const auto& s : batch) n += s.targets.size();
  return n;
}

template <typename Scalar>
std::vector<std::pair<Scalar*, ptrdiff_t>> FlatArrays(RnnParams<Scalar>& p) {
  std::vector<std::pair<Scalar*, ptrdiff_t>> out;
  VisitParamArrays(p, [&](const char*, Scalar* data, ptrdiff_t n) {
    out.emplace_back(data, n);
  });
  return out;
}

}  // namespace

template <typename Scalar>
double SequenceLogProb(const RnnParams<Scalar>& p, const TrainSequence& seq) {
  CheckSequence<Scalar>(p.config, seq);
  ForwardCache<Scalar> cache;
  ForwardPass(p, seq.inputs, seq.feature, nullptr, &cache);
  return -CacheLossSum(cache, seq.targets);
}

template <typename Scalar>
Eigen::VectorXd NextDistribution(const RnnParams<Scalar>& p,
                                 const std::vector<int32_t>& inputs,
                                 const std::vector<double>& feature) {
  if (inputs.empty())
    throw DataError("next-word distribution requires at least one input token");
  ForwardCache<Scalar> cache;
  ForwardPass(p, inputs, feature, nullptr, &cache);
  const int last = static_cast<int>(inputs.size()) - 1;
  return (cache.logits[last].array() - cache.lse[last]).exp().matrix();
}

template <typename Scalar>
double BatchLoss(const RnnParams<Scalar>& p,
                 const std::vector<TrainSequence>& batch) {
  double sum = 0.0;
  for (const auto& seq : batch) sum -= SequenceLogProb(p, seq);
  const size_t tokens = TokenCount<Scalar>(batch);
  if (tokens == 0) throw DataError("batch has no target tokens");
  return sum / static_cast<double>(tokens);
}

template <typename Scalar>
RnnParams<Scalar> ComputeGradients(const RnnParams<Scalar>& p,
                                   const std::vector<TrainSequence>& batch,
                                   int truncation, Rng* dropout_rng,
                                   double* loss_out) {
  RnnParams<Scalar> grads = ZeroRnn<Scalar>(p.config);
  double loss_sum = 0.0;
  for (const auto& seq : batch) {
    CheckSequence<Scalar>(p.config, seq);
    ForwardCache<Scalar> cache;
    ForwardPass(p, seq.inputs, seq.feature, dropout_rng, &cache);
    loss_sum += CacheLossSum(cache, seq.targets);
    BackwardPass(p, seq, cache, truncation, &grads);
  }
  const size_t tokens = TokenCount<Scalar>(batch);
  if (tokens == 0) throw DataError("batch has no target tokens");
  const Scalar inv = static_cast<Scalar>(1.0 / static_cast<double>(tokens));
  VisitParamArrays(grads, [&](const char*, Scalar* data, ptrdiff_t n) {
    for (ptrdiff_t k = 0; k < n; ++k) data[k] *= inv;
  });
  if (loss_out) *loss_out = loss_sum / static_cast<double>(tokens);
  return grads;
}

void TrainConfig::Validate() const {
  if (learning_rate < 0.0) throw DataError("train config: negative learning rate");
  if (epochs < 0) throw DataError("train config: negative epoch count");
  if (batch_size < 1) throw DataError("train config: batch_size must be >= 1");
  if (truncation < 0) throw DataError("train config: negative truncation");
  if (clip_norm < 0.0) throw DataError("train config: negative clip norm");
  if (optimizer != "sgd" && optimizer != "adam")
    throw DataError("train config: optimizer must be sgd or adam, got " +
                    optimizer);
}

template <typename Scalar>
std::vector<double> TrainRnn(RnnParams<Scalar>* p,
                             const std::vector<TrainSequence>& data,
                             const TrainConfig& tc) {
  tc.Validate();
  if (data.empty()) throw DataError("training corpus is empty");
  for (const auto& seq : data) CheckSequence<Scalar>(p->config, seq);

  Rng rng(tc.seed);
  const bool adam = tc.optimizer == "adam";
  RnnParams<Scalar> m, v;
  if (adam) {
    m = ZeroRnn<Scalar>(p->config);
    v = ZeroRnn<Scalar>(p->config);
  }
  auto params_flat = FlatArrays(*p);
  int64_t step = 0;

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});

  std::vector<double> epoch_losses;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    rng.Shuffle(order);
    double loss_weighted = 0.0;
    size_t tokens_seen = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(tc.batch_size)) {
      std::vector<TrainSequence> batch;
      const size_t end = std::min(order.size(),
                                  start + static_cast<size_t>(tc.batch_size));
      for (size_t k = start; k < end; ++k) batch.push_back(data[order[k]]);

      double loss = 0.0;
      Rng* drop = p->config.dropout > 0.0 ? &rng : nullptr;
      RnnParams<Scalar> grads =
          ComputeGradients(*p, batch, tc.truncation, drop, &loss);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: loss " << loss << " at epoch " << epoch + 1
            << ", batch starting at sentence " << start
            << "; reduce the learning rate";
        throw DivergenceError(msg.str());
      }
      const size_t batch_tokens = TokenCount<Scalar>(batch);
      loss_weighted += loss * static_cast<double>(batch_tokens);
      tokens_seen += batch_tokens;

      auto grads_flat = FlatArrays(grads);
      if (tc.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [ptr, n] : grads_flat)
          for (ptrdiff_t k = 0; k < n; ++k)
            sq += static_cast<double>(ptr[k]) * static_cast<double>(ptr[k]);
        const double norm = std::sqrt(sq);
        if (norm > tc.clip_norm) {
          const Scalar scale = static_cast<Scalar>(tc.clip_norm / norm);
          for (const auto& [ptr, n] : grads_flat)
            for (ptrdiff_t k = 0; k < n; ++k) ptr[k] *= scale;
        }
      }

      const Scalar lr = static_cast<Scalar>(tc.learning_rate);
      if (!adam) {
        for (size_t a = 0; a < params_flat.size(); ++a) {
          Scalar* w = params_flat[a].first;
          const Scalar* g = grads_flat[a].first;
          for (ptrdiff_t k = 0; k < params_flat[a].second; ++k)
            w[k] -= lr * g[k];
        }
      } else {
        ++step;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
        auto m_flat = FlatArrays(m);
        auto v_flat = FlatArrays(v);
        for (size_t a = 0; a < params_flat.size(); ++a) {
          Scalar* w = params_flat[a].first;
          const Scalar* g = grads_flat[a].first;
          Scalar* ma = m_flat[a].first;
          Scalar* va = v_flat[a].first;
          for (ptrdiff_t k = 0; k < params_flat[a].second; ++k) {
            const double gk = static_cast<double>(g[k]);
            const double mk = b1 * static_cast<double>(ma[k]) + (1.0 - b1) * gk;
            const double vk =
                b2 * static_cast<double>(va[k]) + (1.0 - b2) * gk * gk;
            ma[k] = static_cast<Scalar>(mk);
            va[k] = static_cast<Scalar>(vk);
            w[k] -= static_cast<Scalar>(tc.learning_rate * (mk / bc1) /
                                        (std::sqrt(vk / bc2) + eps));
          }
        }
      }
    }
    epoch_losses.push_back(loss_weighted / static_cast<double>(tokens_seen));
  }
  return epoch_losses;
}

double GradCheck(const RnnParams<double>& p,
                 const std::vector<TrainSequence>& batch, double epsilon,
                 size_t sample_cap) {
  double loss = 0.0;
  RnnParams<double> analytic = ComputeGradients(p, batch, 0, nullptr, &loss);
  RnnParams<double> probe = p;
  auto probe_flat = FlatArrays(probe);
  auto grad_flat = FlatArrays(analytic);

  size_t total = 0;
  for (const auto& [ptr, n] : probe_flat) total += static_cast<size_t>(n);

  std::vector<std::pair<size_t, size_t>> coords;  // (array, offset)
  if (total <= sample_cap) {
    for (size_t a = 0; a < probe_flat.size(); ++a)
      for (ptrdiff_t k = 0; k < probe_flat[a].second; ++k)
        coords.emplace_back(a, static_cast<size_t>(k));
  } else {
    // Deterministic evenly spaced sample across the flattened parameters.
    for (size_t s = 0; s < sample_cap; ++s) {
      size_t flat = s * total / sample_cap;
      size_t a = 0;
      while (flat >= static_cast<size_t>(probe_flat[a].second)) {
        flat -= static_cast<size_t>(probe_flat[a].second);
        ++a;
      }
      coords.emplace_back(a, flat);
    }
  }

  // Central differences of an O(1) loss carry ~1e-15 of cancellation in
  // up - down, so numeric gradients are only trustworthy down to about
  // noise/(2*epsilon).  Coordinates where both sides sit below that scale
  // compare nothing but rounding noise and are skipped.
  const double noise_floor = 1e-6;
  double max_rel = 0.0;
  for (const auto& [a, k] : coords) {
    double* slot = probe_flat[a].first + k;
    const double saved = *slot;
    *slot = saved + epsilon;
    const double up = BatchLoss(probe, batch);
    *slot = saved - epsilon;
    const double down = BatchLoss(probe, batch);
    *slot = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a_val = grad_flat[a].first[k];
    if (std::abs(a_val) < noise_floor && std::abs(numeric) < noise_floor)
      continue;
    const double rel = std::abs(a_val - numeric) /
                       std::max({std::abs(a_val), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

TrainSequence MakeSequence(const Vocab& vocab, const Command& sentence,
                           const std::vector<double>& feature) {
  TrainSequence seq;
  const std::vector<int32_t> ids = vocab.Ids(sentence);
  seq.inputs.push_back(Vocab::kBos);
  seq.inputs.insert(seq.inputs.end(), ids.begin(), ids.end());
  seq.targets = ids;
  seq.targets.push_back(Vocab::kEos);
  seq.feature = feature;
  return seq;
}

template <typename Scalar>
double SentenceLogProbLn(const RnnLm<Scalar>& lm, const Command& sentence,
                         const std::vector<double>& feature) {
  return SequenceLogProb(lm.params, MakeSequence(lm.vocab, sentence, feature));
}

template <typename Scalar>
double RnnPerplexity(const RnnLm<Scalar>& lm,
                     const std::vector<Command>& corpus) {
  if (corpus.empty()) throw DataError("perplexity corpus is empty");
  double log_sum = 0.0;
  size_t tokens = 0;
  for (const auto& sentence : corpus) {
    log_sum += SentenceLogProbLn(lm, sentence);
    tokens += sentence.size() + 1;  // words plus </s>
  }
  return std::exp(-log_sum / static_cast<double>(tokens));
}

template <typename Scalar>
std::vector<double> TrainRnnLm(RnnLm<Scalar>* lm,
                               const std::vector<Command>& corpus,
                               const TrainConfig& tc) {
  std::vector<TrainSequence> data;
  data.reserve(corpus.size());
  for (const auto& sentence : corpus)
    data.push_back(MakeSequence(lm->vocab, sentence));
  return TrainRnn(&lm->params, data, tc);
}

template <typename Scalar>
std::vector<double> FinetuneRnnLm(RnnLm<Scalar>* lm,
                                  const std::vector<Command>& corpus,
                                  int epochs, TrainConfig tc) {
  tc.epochs = epochs;
  return TrainRnnLm(lm, corpus, tc);
}

namespace {

constexpr char kMagic[8] = {'C', 'M', 'D', 'L', 'M', 'R', 'N', 'N'};
constexpr uint32_t kVersion = 1;

void PutU32(std::ostream& os, uint32_t v) {
  unsigned char buf[4];
  for (int k = 0; k < 4; ++k) buf[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(buf), 4);
}

void PutU64(std::ostream& os, uint64_t v) {
  unsigned char buf[8];
  for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

void PutF32(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  PutU32(os, bits);
}

uint32_t GetU32(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  if (!is) throw DataError("checkpoint truncated");
  uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<uint32_t>(buf[k]) << (8 * k);
  return v;
}

uint64_t GetU64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw DataError("checkpoint truncated");
  uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<uint64_t>(buf[k]) << (8 * k);
  return v;
}

float GetF32(std::istream& is) {
  const uint32_t bits = GetU32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

template <typename Scalar>
void SaveRnnCheckpoint(const std::string& path, const RnnLm<Scalar>& lm) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  os.write(kMagic, 8);
  PutU32(os, kVersion);
  PutU32(os, lm.params.config.tied ? 1u : 0u);
  PutU32(os, static_cast<uint32_t>(lm.params.config.vocab_size));
  PutU32(os, static_cast<uint32_t>(lm.params.config.embed_dim));
  PutU32(os, static_cast<uint32_t>(lm.params.config.hidden_dim));
  PutU32(os, static_cast<uint32_t>(lm.params.config.num_layers));
  PutU32(os, static_cast<uint32_t>(lm.params.config.feat_dim));
  PutF32(os, static_cast<float>(lm.params.config.dropout));
  PutU32(os, static_cast<uint32_t>(lm.vocab.size()));
  for (int32_t k = 0; k < lm.vocab.size(); ++k) {
    const std::string& w = lm.vocab.Word(k);
    PutU32(os, static_cast<uint32_t>(w.size()));
    os.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  VisitParamArrays(lm.params,
                   [&](const char*, const Scalar* data, ptrdiff_t n) {
                     PutU64(os, static_cast<uint64_t>(n));
                     for (ptrdiff_t k = 0; k < n; ++k)
                       PutF32(os, static_cast<float>(data[k]));
                   });
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

template <typename Scalar>
RnnLm<Scalar> LoadRnnCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("not an rnn checkpoint: " + path);
  const uint32_t version = GetU32(is);
  if (version != kVersion) {
    std::ostringstream msg;
    msg << "unsupported checkpoint version " << version << " in " << path;
    throw DataError(msg.str());
  }
  const uint32_t flags = GetU32(is);
  RnnConfig cfg;
  cfg.tied = (flags & 1u) != 0;
  cfg.vocab_size = static_cast<int32_t>(GetU32(is));
  cfg.embed_dim = static_cast<int32_t>(GetU32(is));
  cfg.hidden_dim = static_cast<int32_t>(GetU32(is));
  cfg.num_layers = static_cast<int32_t>(GetU32(is));
  cfg.feat_dim = static_cast<int32_t>(GetU32(is));
  cfg.dropout = static_cast<double>(GetF32(is));
  cfg.Validate();

  const uint32_t vocab_count = GetU32(is);
  if (vocab_count != static_cast<uint32_t>(cfg.vocab_size))
    throw DataError("checkpoint vocabulary size disagrees with config");
  std::vector<std::string> words;
  words.reserve(vocab_count);
  for (uint32_t k = 0; k < vocab_count; ++k) {
    const uint32_t len = GetU32(is);
    if (len > 4096) throw DataError("checkpoint vocabulary entry too long");
    std::string w(len, '\0');
    is.read(w.data(), static_cast<std::streamsize>(len));
    if (!is) throw DataError("checkpoint truncated");
    words.push_back(std::move(w));
  }

  RnnLm<Scalar> lm;
  lm.vocab = Vocab::FromWords(words);
  if (lm.vocab.size() != cfg.vocab_size)
    throw DataError("checkpoint vocabulary is malformed");
  lm.params = ZeroRnn<Scalar>(cfg);
  VisitParamArrays(lm.params, [&](const char* name, Scalar* data,
                                  ptrdiff_t n) {
    const uint64_t stored = GetU64(is);
    if (stored != static_cast<uint64_t>(n)) {
      std::ostringstream msg;
      msg << "checkpoint array " << name << " has " << stored
          << " values, expected " << n;
      throw DataError(msg.str());
    }
    for (ptrdiff_t k = 0; k < n; ++k)
      data[k] = static_cast<Scalar>(GetF32(is));
  });
  return lm;
}

template struct RnnParams<float>;
template struct RnnParams<double>;
template RnnParams<double> RnnParams<float>::Cast<double>() const;
template RnnParams<float> RnnParams<double>::Cast<float>() const;
template RnnParams<float> RnnParams<float>::Cast<float>() const;
template RnnParams<double> RnnParams<double>::Cast<double>() const;

template RnnParams<float> ZeroRnn<float>(const RnnConfig&);
template RnnParams<double> ZeroRnn<double>(const RnnConfig&);
template RnnParams<float> InitRnn<float>(const RnnConfig&, uint64_t);
template RnnParams<double> InitRnn<double>(const RnnConfig&, uint64_t);
template double SequenceLogProb<float>(const RnnParams<float>&,
                                       const TrainSequence&);
template double SequenceLogProb<double>(const RnnParams<double>&,
                                        const TrainSequence&);
template Eigen::VectorXd NextDistribution<float>(const RnnParams<float>&,
                                                 const std::vector<int32_t>&,
                                                 const std::vector<double>&);
template Eigen::VectorXd NextDistribution<double>(const RnnParams<double>&,
                                                  const std::vector<int32_t>&,
                                                  const std::vector<double>&);
template double BatchLoss<float>(const RnnParams<float>&,
                                 const std::vector<TrainSequence>&);
template double BatchLoss<double>(const RnnParams<double>&,
                                  const std::vector<TrainSequence>&);
template RnnParams<float> ComputeGradients<float>(
    const RnnParams<float>&, const std::vector<TrainSequence>&, int, Rng*,
    double*);
template RnnParams<double> ComputeGradients<double>(
    const RnnParams<double>&, const std::vector<TrainSequence>&, int, Rng*,
    double*);
template std::vector<double> TrainRnn<float>(RnnParams<float>*,
                                             const std::vector<TrainSequence>&,
                                             const TrainConfig&);
template std::vector<double> TrainRnn<double>(
    RnnParams<double>*, const std::vector<TrainSequence>&, const TrainConfig&);
template double SentenceLogProbLn<float>(const RnnLm<float>&, const Command&,
                                         const std::vector<double>&);
template double SentenceLogProbLn<double>(const RnnLm<double>&, const Command&,
                                          const std::vector<double>&);
template double RnnPerplexity<float>(const RnnLm<float>&,
                                     const std::vector<Command>&);
template double RnnPerplexity<double>(const RnnLm<double>&,
                                      const std::vector<Command>&);
template std::vector<double> TrainRnnLm<float>(RnnLm<float>*,
                                               const std::vector<Command>&,
                                               const TrainConfig&);
template std::vector<double> TrainRnnLm<double>(RnnLm<double>*,
                                                const std::vector<Command>&,
                                                const TrainConfig&);
template std::vector<double> FinetuneRnnLm<float>(RnnLm<float>*,
                                                  const std::vector<Command>&,
                                                  int, TrainConfig);
template std::vector<double> FinetuneRnnLm<double>(RnnLm<double>*,
                                                   const std::vector<Command>&,
                                                   int, TrainConfig);
template void SaveRnnCheckpoint<float>(const std::string&,
                                       const RnnLm<float>&);
template void SaveRnnCheckpoint<double>(const std::string&,
                                        const RnnLm<double>&);
template RnnLm<float> LoadRnnCheckpoint<float>(const std::string&);
template RnnLm<double> LoadRnnCheckpoint<double>(const std::string&);

}  // namespace cmdlm
