// ngram.h
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
// Backoff n-gram language models with Witten-Bell or Kneser-Ney smoothing,
// query-time interpolation, count-cutoff pruning and ARPA I/O.
//
// All probabilities are log base 10 throughout, matching the ARPA format.
// The event space of every conditional distribution is the vocabulary
// minus the sentence-start token, which is only ever conditioned on.
// Smoothing bottoms out in a uniform distribution over that event space,
// so unknown words always score finitely.

#ifndef CMDLM_NGRAM_H_
#define CMDLM_NGRAM_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cmdlm/types.h"
#include "cmdlm/vocab.h"

namespace cmdlm {

// An n-gram of up to four word ids packed into one 64-bit key, 16 bits per
// slot with the first word in the highest occupied slot.  Each slot holds
// id + 1 so that zero means empty; key order is lexicographic id order.
using GramKey = uint64_t;

GramKey PackGram(const int32_t* ids, int n);
GramKey PackGram(const std::vector<int32_t>& ids);

constexpr int kMaxOrder = 4;

struct NGramCounts {
  int order = 0;
  // per_order[n-1]: counts of n-grams.  The sentence-start token is not
  // counted as a unigram event.
  std::vector<std::map<GramKey, uint64_t>> per_order;
};

NGramCounts CountNGrams(const std::vector<Command>& corpus, int order,
                        const Vocab& vocab);

enum class Smoothing { kWittenBell, kKneserNey };
Smoothing ParseSmoothing(const std::string& name);

// Log-10 conditional distribution over word strings; the common face of
// plain n-gram models, mixtures and the neural models.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;
  virtual double CondLogProb(const std::vector<std::string>& context,
                             const std::string& word) const = 0;
  virtual const Vocab& vocab() const = 0;
};

class NGramModel : public ConditionalModel {
 public:
  struct Entry {
    double logp = 0.0;   // log10 p(word | context)
    double bow = 0.0;    // log10 backoff weight, valid if has_bow
    uint64_t count = 0;  // estimation-time count, 0 for ARPA-loaded models
    bool has_bow = false;
  };

  NGramModel() = default;
  NGramModel(int order, Vocab vocab);

  int order() const { return order_; }
  const Vocab& vocab() const override { return vocab_; }

  const std::map<GramKey, Entry>& table(int n) const;
  std::map<GramKey, Entry>& mutable_table(int n);

  uint64_t TotalNGrams() const;

  double CondLogProbIds(const std::vector<int32_t>& context,
                        int32_t word) const;
  double CondLogProb(const std::vector<std::string>& context,
                     const std::string& word) const override;

 private:
  int order_ = 0;
  Vocab vocab_;
  std::vector<std::map<GramKey, Entry>> tables_;
};

// Estimation.  Witten-Bell interpolates each order with the next lower
// one using the mass T/(T+k); Kneser-Ney applies absolute discounting to
// continuation counts with D = n1/(n1+2*n2) per order.  Both are stored
// in backoff form with renormalized backoff weights.
NGramModel EstimateNGram(const NGramCounts& counts, const Vocab& vocab,
                         Smoothing smoothing);

NGramModel TrainNGram(const std::vector<Command>& corpus, int order,
                      const Vocab& vocab, Smoothing smoothing);

// Query-time linear mixture of component models.
class MixtureModel : public ConditionalModel {
 public:
  MixtureModel(std::vector<std::shared_ptr<const NGramModel>> components,
               std::vector<double> weights);

  double CondLogProb(const std::vector<std::string>& context,
                     const std::string& word) const override;
  // The first component's vocabulary, which scoring treats as primary.
  const Vocab& vocab() const override;

  const std::vector<std::shared_ptr<const NGramModel>>& components() const {
    return components_;
  }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<std::shared_ptr<const NGramModel>> components_;
  std::vector<double> weights_;
};

MixtureModel Interpolate(std::shared_ptr<const NGramModel> domain,
                         std::shared_ptr<const NGramModel> generic,
                         double lambda_domain);

// Count-cutoff pruning.  Drops highest-order entries with the lowest
// counts first and recomputes the affected backoff weights; unigrams are
// never pruned.
NGramModel Prune(const NGramModel& m, uint64_t max_ngrams);

double SentenceLogProb10(const ConditionalModel& m, const Command& sentence);
double Perplexity(const ConditionalModel& m,
                  const std::vector<Command>& corpus);

// Sum of p(w | context) over the full event space; 1 up to rounding for
// any well-formed model.
double NextWordProbSum(const ConditionalModel& m,
                       const std::vector<std::string>& context);

std::string ArpaWrite(const NGramModel& m);
NGramModel ArpaRead(const std::string& text);
void ArpaWriteFile(const std::string& path, const NGramModel& m);
NGramModel ArpaReadFile(const std::string& path);

// Model files on disk are either plain ARPA or a JSON mixture spec
// {"lambda": 0.9, "domain": "...", "generic": "..."} with paths relative
// to the spec file.
std::unique_ptr<ConditionalModel> LoadModelFile(const std::string& path);
void WriteMixtureFile(const std::string& path, const std::string& domain_path,
                      const std::string& generic_path, double lambda_domain);

}  // namespace cmdlm

#endif  // CMDLM_NGRAM_H_
