// experiment.h
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
// End-to-end adaptation experiments over a simulated acoustic channel.
// The channel corrupts words with a confusion table and noisy scores; its
// purpose is ordering-level fidelity for adaptation and rescoring effects,
// not absolute error rates.

#ifndef CMDLM_EXPERIMENT_H_
#define CMDLM_EXPERIMENT_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cmdlm/nbest.h"
#include "cmdlm/types.h"

namespace cmdlm {

// word -> [(confusable word, log-likelihood penalty < 0)].
struct ConfusionTable {
  std::map<std::string, std::vector<std::pair<std::string, double>>> alts;
};

// TSV `word<TAB>alternative<TAB>penalty`.
ConfusionTable ReadConfusionFile(const std::string& path);

// Builds one n-best list per command.  Candidates are the reference plus
// word-level corruptions, enumerated in decreasing corruption likelihood
// and capped at nbest_size; every word of every candidate then draws
// Gaussian score jitter so the reference is not always on top.  Acoustic
// scores are sums of per-word log-likelihoods.
std::vector<NBestList> SimulateChannel(const std::vector<Command>& commands,
                                       const ConfusionTable& confusion,
                                       int nbest_size, uint64_t seed,
                                       double score_noise = 1.0);

struct ExperimentRow {
  std::string decoder;   // fsg | ngram-small
  std::string rescorer;  // none | ngram-large | rnn | mm-rnn
  std::string assoc;     // none | annotated | generated

  std::string Label() const;
  void Validate() const;  // one of the six published combinations
};

struct RnnSettings {
  int embed_dim = 32;  // tied to the output layer, so equal to hidden_dim
  int hidden_dim = 32;
  int layers = 1;
  int pretrain_epochs = 20;
  int finetune_epochs = 25;
  int mm_epochs = 30;
  double learning_rate = 0.5;
  int batch_size = 16;
};

struct ExperimentConfig {
  std::string grammar_path;
  std::string generic_grammar_path;
  std::string confusion_path;
  std::string lexicon_path;      // generated-association lexicon
  std::string annotation_path;   // ground-truth lexicon
  std::string class_index_path;
  std::string cache_dir = "exp-cache";

  uint64_t seed = 0;
  std::vector<uint64_t> sizes = {32, 128, 512};
  int folds = 3;
  int eval_size = 150;
  int generic_size = 1200;

  int nbest_size = 8;
  double score_noise = 1.0;
  double lm_weight = 1.0;
  double wip = 0.0;
  bool replace_firstpass_lm = true;

  int ngram_small_order = 2;
  int ngram_large_order = 4;
  double lambda_domain = 0.9;
  std::string smoothing = "witten-bell";

  RnnSettings rnn;
  std::vector<ExperimentRow> rows;

  void Validate() const;
};

ExperimentConfig LoadExperimentConfig(const std::string& path);

struct ExperimentCell {
  std::string system;
  uint64_t size = 0;
  int fold = 0;
  double wer = 0.0;
};

struct ExperimentReport {
  double baseline_wer = 0.0;  // unadapted generic decode
  std::vector<ExperimentCell> cells;
  int computed = 0;  // cells evaluated this run
  int cached = 0;    // cells loaded from the cache
};

// Runs every (row, size, fold) cell, reusing cached results under
// cache_dir keyed by a config digest.  Errors from any stage carry the
// (row, size, fold) coordinates.
ExperimentReport RunExperiment(const ExperimentConfig& cfg);

// Fixed-format renderings; identical configs yield identical bytes.
std::string RenderReport(const ExperimentConfig& cfg,
                         const ExperimentReport& report);
std::string RenderCellsTsv(const ExperimentReport& report);

}  // namespace cmdlm

#endif  // CMDLM_EXPERIMENT_H_
