// experiment.cc
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

#include "cmdlm/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <sstream>

#include "cmdlm/associate.h"
#include "cmdlm/automaton.h"
#include "cmdlm/corpus.h"
#include "cmdlm/eval.h"
#include "cmdlm/grammar.h"
#include "cmdlm/multimodal.h"
#include "cmdlm/ngram.h"
#include "cmdlm/rescore.h"
#include "cmdlm/rnnlm.h"
#include "cmdlm/rng.h"
#include "cmdlm/vocab.h"
#include "json.hpp"

namespace cmdlm {
namespace {

// Seed derivation paths; appending new stages must not renumber old ones
// or cached results change meaning.
enum SeedPath : uint64_t {
  kSeedEval = 1,
  kSeedChannel = 2,
  kSeedGeneric = 3,
  kSeedFolds = 4,
  kSeedEvalAssoc = 5,
  kSeedPretrain = 6,
  kSeedFinetune = 7,
  kSeedFoldAssocTruth = 8,
  kSeedMmAnnotated = 9,
  kSeedFoldAssocGen = 10,
  kSeedMmGenerated = 11,
  kSeedFeatures = 12,
  kSeedAttach = 13,
};

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string Where(const std::string& path, int line_no) {
  return path + ":" + std::to_string(line_no) + ": ";
}

}  // namespace

ConfusionTable ReadConfusionFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open confusion file " + path);
  ConfusionTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 3)
      throw DataError(Where(path, line_no) +
                      "expected word<TAB>alternative<TAB>penalty");
    const std::string& word = fields[0];
    const std::string& alt = fields[1];
    if (word.empty() || alt.empty() ||
        SplitWords(word).size() != 1 || SplitWords(alt).size() != 1)
      throw DataError(Where(path, line_no) +
                      "word and alternative must be single nonempty tokens");
    if (alt == word)
      throw DataError(Where(path, line_no) + "alternative equals the word '" +
                      word + "'");
    double penalty = 0.0;
    try {
      size_t used = 0;
      penalty = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument(fields[2]);
    } catch (const std::exception&) {
      throw DataError(Where(path, line_no) + "bad penalty '" + fields[2] +
                      "'");
    }
    if (!std::isfinite(penalty) || penalty >= 0.0)
      throw DataError(Where(path, line_no) +
                      "penalty must be a finite negative log-likelihood");
    auto& alts = table.alts[word];
    for (const auto& existing : alts)
      if (existing.first == alt)
        throw DataError(Where(path, line_no) + "duplicate entry " + word +
                        " -> " + alt);
    alts.emplace_back(alt, penalty);
  }
  return table;
}

namespace {

// One corruption pattern: substitutions as (slot, alternative) index pairs
// with strictly increasing slots.  Enumeration pops patterns in decreasing
// total penalty and expands only slots past the last substituted one, so
// each pattern is generated exactly once.
struct CorruptPattern {
  double penalty = 0.0;
  std::vector<std::pair<size_t, size_t>> subs;
};

struct PatternWorse {
  bool operator()(const CorruptPattern& a, const CorruptPattern& b) const {
    if (a.penalty != b.penalty) return a.penalty < b.penalty;
    return a.subs > b.subs;  // deterministic tie order
  }
};

NBestList SimulateOne(const Command& ref, const ConfusionTable& table,
                      int nbest_size, uint64_t utt_seed, double score_noise,
                      const std::string& utt_id) {
  // Slots: reference positions that have confusable alternatives.
  std::vector<size_t> slot_pos;
  std::vector<const std::vector<std::pair<std::string, double>>*> slot_alts;
  for (size_t i = 0; i < ref.size(); ++i) {
    auto it = table.alts.find(ref[i]);
    if (it != table.alts.end()) {
      slot_pos.push_back(i);
      slot_alts.push_back(&it->second);
    }
  }

  std::priority_queue<CorruptPattern, std::vector<CorruptPattern>,
                      PatternWorse>
      frontier;
  frontier.push(CorruptPattern{});
  std::vector<CorruptPattern> picked;
  while (!frontier.empty() &&
         picked.size() < static_cast<size_t>(nbest_size)) {
    CorruptPattern p = frontier.top();
    frontier.pop();
    const size_t next_slot = p.subs.empty() ? 0 : p.subs.back().first + 1;
    for (size_t s = next_slot; s < slot_pos.size(); ++s) {
      for (size_t a = 0; a < slot_alts[s]->size(); ++a) {
        CorruptPattern child = p;
        child.penalty += (*slot_alts[s])[a].second;
        child.subs.emplace_back(s, a);
        frontier.push(std::move(child));
      }
    }
    picked.push_back(std::move(p));
  }

  // Acoustic score: the corruption penalty per word plus Gaussian jitter
  // on every word of every hypothesis, so the reference can be outranked.
  Rng rng(utt_seed);
  NBestList nb;
  nb.utt_id = utt_id;
  nb.reference = ref;
  for (const CorruptPattern& p : picked) {
    Command text = ref;
    std::vector<double> word_penalty(ref.size(), 0.0);
    for (const auto& [slot, alt] : p.subs) {
      text[slot_pos[slot]] = (*slot_alts[slot])[alt].first;
      word_penalty[slot_pos[slot]] = (*slot_alts[slot])[alt].second;
    }
    double acoustic = 0.0;
    for (size_t j = 0; j < text.size(); ++j)
      acoustic += word_penalty[j] + score_noise * rng.Gaussian();
    Hypothesis h;
    h.text = std::move(text);
    h.acoustic_logscore = acoustic;
    nb.hyps.push_back(std::move(h));
  }
  SortByFirstpass(nb);
  return nb;
}

}  // namespace

std::vector<NBestList> SimulateChannel(const std::vector<Command>& commands,
                                       const ConfusionTable& confusion,
                                       int nbest_size, uint64_t seed,
                                       double score_noise) {
  if (nbest_size < 1)
    throw DataError("nbest size must be at least 1, got " +
                    std::to_string(nbest_size));
  std::vector<NBestList> lists;
  lists.reserve(commands.size());
  for (size_t i = 0; i < commands.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "u%05zu", i);
    lists.push_back(SimulateOne(commands[i], confusion, nbest_size,
                                DeriveSeed(seed, {i}), score_noise, id));
  }
  return lists;
}

std::string ExperimentRow::Label() const {
  std::string label = decoder;
  if (!rescorer.empty() && rescorer != "none") label += "+" + rescorer;
  if (!assoc.empty() && assoc != "none") label += "+" + assoc;
  return label;
}

namespace {

const std::set<std::string>& AllowedRowLabels() {
  static const std::set<std::string> kAllowed = {
      "fsg",
      "ngram-small",
      "ngram-small+ngram-large",
      "ngram-small+rnn",
      "ngram-small+mm-rnn+annotated",
      "ngram-small+mm-rnn+generated",
  };
  return kAllowed;
}

}  // namespace

void ExperimentRow::Validate() const {
  if (AllowedRowLabels().count(Label())) return;
  std::string allowed;
  for (const std::string& l : AllowedRowLabels()) {
    if (!allowed.empty()) allowed += ", ";
    allowed += l;
  }
  throw DataError("experiment row '" + Label() +
                  "' is not one of the published combinations: " + allowed);
}

void ExperimentConfig::Validate() const {
  auto require_path = [](const std::string& p, const char* what) {
    if (p.empty())
      throw DataError(std::string("experiment config is missing the ") + what +
                      " path");
    if (!std::filesystem::exists(p))
      throw DataError(std::string(what) + " path does not exist: " + p);
  };
  require_path(grammar_path, "grammar");
  require_path(generic_grammar_path, "generic grammar");
  require_path(confusion_path, "confusion table");
  require_path(lexicon_path, "keyword lexicon");
  require_path(annotation_path, "annotation lexicon");
  require_path(class_index_path, "class index");
  if (cache_dir.empty()) throw DataError("cache_dir must be nonempty");

  if (sizes.empty()) throw DataError("sizes must be nonempty");
  for (size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw DataError("sizes must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1])
      throw DataError("sizes must be strictly increasing");
  }
  if (folds < 1) throw DataError("folds must be at least 1");
  if (eval_size < 1) throw DataError("eval_size must be at least 1");
  if (generic_size < 1) throw DataError("generic_size must be at least 1");
  if (nbest_size < 1) throw DataError("nbest size must be at least 1");
  if (!std::isfinite(score_noise) || score_noise < 0.0)
    throw DataError("score_noise must be finite and nonnegative");
  if (!std::isfinite(lm_weight) || lm_weight < 0.0)
    throw DataError("lm_weight must be finite and nonnegative");
  if (!std::isfinite(wip)) throw DataError("wip must be finite");
  if (ngram_small_order < 1 || ngram_small_order > kMaxOrder ||
      ngram_large_order < 1 || ngram_large_order > kMaxOrder)
    throw DataError("ngram orders must be in 1.." +
                    std::to_string(kMaxOrder));
  if (!(lambda_domain >= 0.0 && lambda_domain <= 1.0))
    throw DataError("lambda_domain must be in [0, 1]");
  ParseSmoothing(smoothing);
  if (rnn.embed_dim < 1 || rnn.hidden_dim < 1 || rnn.layers < 1)
    throw DataError("rnn dimensions must be positive");
  if (rnn.embed_dim != rnn.hidden_dim)
    throw DataError(
        "experiment rnn models tie the embeddings, so embed_dim must equal "
        "hidden_dim");
  if (rnn.pretrain_epochs < 1 || rnn.finetune_epochs < 1 || rnn.mm_epochs < 1)
    throw DataError("rnn epoch counts must be positive");
  if (!(rnn.learning_rate > 0.0) || rnn.batch_size < 1)
    throw DataError("rnn training settings must be positive");
  if (rows.empty()) throw DataError("rows must be nonempty");
  for (const ExperimentRow& r : rows) r.Validate();
}

namespace {

std::string ResolvePath(const std::filesystem::path& base,
                        const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return p;
  return (base / fp).lexically_normal().string();
}

ExperimentRow ParseRowJson(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw DataError(path + ": each row must be an object");
  ExperimentRow row;
  row.rescorer = "none";
  row.assoc = "none";
  for (const auto& [key, value] : j.items()) {
    if (key == "decoder")
      row.decoder = value.get<std::string>();
    else if (key == "rescorer")
      row.rescorer = value.get<std::string>();
    else if (key == "assoc")
      row.assoc = value.get<std::string>();
    else
      throw DataError(path + ": unknown row key '" + key + "'");
  }
  if (row.decoder.empty())
    throw DataError(path + ": row is missing the decoder field");
  return row;
}

std::vector<ExperimentRow> DefaultRows() {
  return {
      {"fsg", "none", "none"},
      {"ngram-small", "none", "none"},
      {"ngram-small", "ngram-large", "none"},
      {"ngram-small", "rnn", "none"},
      {"ngram-small", "mm-rnn", "annotated"},
      {"ngram-small", "mm-rnn", "generated"},
  };
}

}  // namespace

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!j.is_object())
    throw DataError(path + ": experiment config must be a JSON object");

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  ExperimentConfig cfg;
  cfg.rows = DefaultRows();
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "grammar")
        cfg.grammar_path = ResolvePath(base, value.get<std::string>());
      else if (key == "generic_grammar")
        cfg.generic_grammar_path = ResolvePath(base, value.get<std::string>());
      else if (key == "confusions")
        cfg.confusion_path = ResolvePath(base, value.get<std::string>());
      else if (key == "lexicon")
        cfg.lexicon_path = ResolvePath(base, value.get<std::string>());
      else if (key == "annotations")
        cfg.annotation_path = ResolvePath(base, value.get<std::string>());
      else if (key == "class_index")
        cfg.class_index_path = ResolvePath(base, value.get<std::string>());
      else if (key == "cache_dir")
        cfg.cache_dir = ResolvePath(base, value.get<std::string>());
      else if (key == "seed")
        cfg.seed = value.get<uint64_t>();
      else if (key == "sizes")
        cfg.sizes = value.get<std::vector<uint64_t>>();
      else if (key == "folds")
        cfg.folds = value.get<int>();
      else if (key == "eval_size")
        cfg.eval_size = value.get<int>();
      else if (key == "generic_size")
        cfg.generic_size = value.get<int>();
      else if (key == "channel") {
        for (const auto& [ck, cv] : value.items()) {
          if (ck == "nbest")
            cfg.nbest_size = cv.get<int>();
          else if (ck == "score_noise")
            cfg.score_noise = cv.get<double>();
          else
            throw DataError(path + ": unknown channel key '" + ck + "'");
        }
      } else if (key == "rescore") {
        for (const auto& [rk, rv] : value.items()) {
          if (rk == "lm_weight")
            cfg.lm_weight = rv.get<double>();
          else if (rk == "wip")
            cfg.wip = rv.get<double>();
          else if (rk == "replace_firstpass_lm")
            cfg.replace_firstpass_lm = rv.get<bool>();
          else
            throw DataError(path + ": unknown rescore key '" + rk + "'");
        }
      } else if (key == "ngram") {
        for (const auto& [nk, nv] : value.items()) {
          if (nk == "small_order")
            cfg.ngram_small_order = nv.get<int>();
          else if (nk == "large_order")
            cfg.ngram_large_order = nv.get<int>();
          else if (nk == "lambda")
            cfg.lambda_domain = nv.get<double>();
          else if (nk == "smoothing")
            cfg.smoothing = nv.get<std::string>();
          else
            throw DataError(path + ": unknown ngram key '" + nk + "'");
        }
      } else if (key == "rnn") {
        for (const auto& [rk, rv] : value.items()) {
          if (rk == "embed_dim")
            cfg.rnn.embed_dim = rv.get<int>();
          else if (rk == "hidden_dim")
            cfg.rnn.hidden_dim = rv.get<int>();
          else if (rk == "layers")
            cfg.rnn.layers = rv.get<int>();
          else if (rk == "pretrain_epochs")
            cfg.rnn.pretrain_epochs = rv.get<int>();
          else if (rk == "finetune_epochs")
            cfg.rnn.finetune_epochs = rv.get<int>();
          else if (rk == "mm_epochs")
            cfg.rnn.mm_epochs = rv.get<int>();
          else if (rk == "learning_rate")
            cfg.rnn.learning_rate = rv.get<double>();
          else if (rk == "batch_size")
            cfg.rnn.batch_size = rv.get<int>();
          else
            throw DataError(path + ": unknown rnn key '" + rk + "'");
        }
      } else if (key == "rows") {
        if (!value.is_array())
          throw DataError(path + ": rows must be an array");
        cfg.rows.clear();
        for (const auto& r : value) cfg.rows.push_back(ParseRowJson(r, path));
      } else {
        throw DataError(path + ": unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return cfg;
}

namespace {

std::string FormatDouble17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Digest over config values and input file contents.  Cached cells are
// reusable exactly when every number that can influence them is equal.
std::string ConfigDigest(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "v1";
  os << "|seed=" << cfg.seed;
  os << "|folds=" << cfg.folds;
  os << "|eval=" << cfg.eval_size;
  os << "|generic=" << cfg.generic_size;
  os << "|nbest=" << cfg.nbest_size;
  os << "|noise=" << FormatDouble17(cfg.score_noise);
  os << "|lmw=" << FormatDouble17(cfg.lm_weight);
  os << "|wip=" << FormatDouble17(cfg.wip);
  os << "|replace=" << (cfg.replace_firstpass_lm ? 1 : 0);
  os << "|orders=" << cfg.ngram_small_order << "," << cfg.ngram_large_order;
  os << "|lambda=" << FormatDouble17(cfg.lambda_domain);
  os << "|smoothing=" << cfg.smoothing;
  os << "|rnn=" << cfg.rnn.embed_dim << "," << cfg.rnn.hidden_dim << ","
     << cfg.rnn.layers << "," << cfg.rnn.pretrain_epochs << ","
     << cfg.rnn.finetune_epochs << "," << cfg.rnn.mm_epochs << ","
     << FormatDouble17(cfg.rnn.learning_rate) << "," << cfg.rnn.batch_size;
  for (const std::string& p :
       {cfg.grammar_path, cfg.generic_grammar_path, cfg.confusion_path,
        cfg.lexicon_path, cfg.annotation_path, cfg.class_index_path}) {
    os << "|file[" << std::filesystem::path(p).filename().string()
       << "]=" << HashString(ReadTextFile(p));
  }
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(HashString(os.str())));
  return hex;
}

std::optional<double> ReadCachedValue(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::string text;
  std::getline(in, text);
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw DataError("corrupt cache file " + file.string());
  }
}

void WriteCachedValue(const std::filesystem::path& file, double value) {
  WriteTextFile(file.string(), FormatDouble17(value) + "\n");
}

// Per-image features: a soft one-hot of the image's class with seeded
// jitter, enough for the projection to recover the object class.
FeatureMap BuildImageFeatures(const ClassIndex& index, uint64_t seed) {
  const int dim = static_cast<int>(index.images.size());
  FeatureMap features;
  int rank = 0;
  for (const auto& [class_name, images] : index.images) {
    for (const std::string& image : images) {
      Rng rng(DeriveSeed(seed, {kSeedFeatures, HashString(image)}));
      std::vector<double> v(dim);
      for (int d = 0; d < dim; ++d) v[d] = rng.Uniform(-0.1, 0.1);
      v[rank] += 1.0;
      features[image] = std::move(v);
    }
    ++rank;
  }
  return features;
}

std::vector<std::vector<double>> AssocFeatures(const AssociationTable& table,
                                               const FeatureMap& features,
                                               int dim) {
  std::vector<std::vector<double>> out;
  out.reserve(table.rows.size());
  for (const AssociationRow& row : table.rows) {
    if (!row.matched()) {
      out.emplace_back(dim, 0.0);
    } else {
      out.push_back(features.at(row.image_id));
    }
  }
  return out;
}

Vocab UnionVocab(const std::vector<Command>& corpus,
                 const std::vector<std::string>& extra_words) {
  std::set<std::string> words(extra_words.begin(), extra_words.end());
  for (const Command& c : corpus) words.insert(c.begin(), c.end());
  return Vocab::FromWords({words.begin(), words.end()});
}

std::vector<MmPair> MakeMmPairs(const std::vector<Command>& commands,
                                const AssociationTable& assoc,
                                const FeatureMap& features, int dim) {
  std::vector<std::vector<double>> feats =
      AssocFeatures(assoc, features, dim);
  std::vector<MmPair> pairs(commands.size());
  for (size_t i = 0; i < commands.size(); ++i) {
    pairs[i].command = commands[i];
    pairs[i].feature = std::move(feats[i]);
    pairs[i].image_id = assoc.rows[i].image_id;
  }
  return pairs;
}

double NgramScoreLn(const ConditionalModel& m, const Command& c) {
  return SentenceLogProb10(m, c) * std::log(10.0);
}

// First pass: attach weighted LM scores to the raw channel lists and
// re-rank, the way lattice rescoring would see them.
std::vector<NBestList> FirstPassDecode(const std::vector<NBestList>& channel,
                                       const ConditionalModel& lm,
                                       double lm_weight, double wip) {
  std::vector<NBestList> out = channel;
  for (NBestList& nb : out) {
    for (Hypothesis& h : nb.hyps)
      h.firstpass_lm_logscore =
          lm_weight * NgramScoreLn(lm, h.text) +
          wip * static_cast<double>(h.text.size());
    SortByFirstpass(nb);
  }
  return out;
}

double WerAgainst(const std::vector<Command>& refs,
                  const std::vector<Command>& hyps) {
  std::vector<std::pair<Command, Command>> pairs(refs.size());
  for (size_t i = 0; i < refs.size(); ++i) pairs[i] = {refs[i], hyps[i]};
  return CorpusWer(pairs).Wer();
}

TrainConfig MakeTrainConfig(const RnnSettings& s, int epochs, uint64_t seed) {
  TrainConfig tc;
  tc.learning_rate = s.learning_rate;
  tc.epochs = epochs;
  tc.batch_size = s.batch_size;
  tc.seed = seed;
  return tc;
}

std::string CellCoord(const std::string& label, uint64_t size, int fold) {
  return "row " + label + " size " + std::to_string(size) + " fold " +
         std::to_string(fold) + ": ";
}

}  // namespace

ExperimentReport RunExperiment(const ExperimentConfig& cfg) {
  cfg.Validate();

  const Automaton domain =
      CompileGrammar(ParseGrammar(ReadTextFile(cfg.grammar_path)));
  const Automaton generic =
      CompileGrammar(ParseGrammar(ReadTextFile(cfg.generic_grammar_path)));
  const ConfusionTable confusion = ReadConfusionFile(cfg.confusion_path);
  const KeywordLexicon lexicon = ReadKeywordLexicon(cfg.lexicon_path);
  const KeywordLexicon annotations = ReadKeywordLexicon(cfg.annotation_path);
  const ClassIndex index = ReadClassIndex(cfg.class_index_path);

  const FeatureMap features = BuildImageFeatures(index, cfg.seed);
  const int feat_dim = static_cast<int>(index.images.size());

  // Evaluation set with ground-truth image associations and the simulated
  // channel outputs, fixed across all cells.
  const std::vector<Command> eval_cmds =
      Sample(domain, static_cast<size_t>(cfg.eval_size),
             DeriveSeed(cfg.seed, {kSeedEval}), SampleMode::kProductionUniform);
  const std::vector<NBestList> channel =
      SimulateChannel(eval_cmds, confusion, cfg.nbest_size,
                      DeriveSeed(cfg.seed, {kSeedChannel}), cfg.score_noise);
  const AssociationTable eval_assoc =
      Associate(eval_cmds, annotations, index,
                DeriveSeed(cfg.seed, {kSeedEvalAssoc}));
  const std::vector<std::vector<double>> eval_feats =
      AssocFeatures(eval_assoc, features, feat_dim);

  const std::vector<Command> generic_corpus =
      Sample(generic, static_cast<size_t>(cfg.generic_size),
             DeriveSeed(cfg.seed, {kSeedGeneric}),
             SampleMode::kProductionUniform);

  FoldSpec fold_spec;
  fold_spec.sizes = cfg.sizes;
  fold_spec.folds_per_size = cfg.folds;
  fold_spec.seed = DeriveSeed(cfg.seed, {kSeedFolds});
  const std::vector<Fold> folds =
      MakeFolds(domain, fold_spec, SampleMode::kProductionUniform);
  std::map<std::pair<uint64_t, int>, const std::vector<Command>*> fold_of;
  for (const Fold& f : folds) fold_of[{f.size, f.fold}] = &f.commands;

  const std::filesystem::path cache_root =
      std::filesystem::path(cfg.cache_dir) / ConfigDigest(cfg);
  std::filesystem::create_directories(cache_root);

  const Smoothing smoothing = ParseSmoothing(cfg.smoothing);
  const std::vector<std::string>& domain_words = domain.symbols;

  // Generic-side models, built at most once per run and only when some
  // uncached cell needs them.
  std::shared_ptr<const NGramModel> generic_small, generic_large;
  std::optional<RnnLm<float>> pretrained;
  auto ensure_generic_small = [&]() -> std::shared_ptr<const NGramModel> {
    if (!generic_small) {
      const Vocab v = Vocab::Build(generic_corpus, Vocab::kMaxSize);
      generic_small = std::make_shared<NGramModel>(TrainNGram(
          generic_corpus, cfg.ngram_small_order, v, smoothing));
    }
    return generic_small;
  };
  auto ensure_generic_large = [&]() -> std::shared_ptr<const NGramModel> {
    if (!generic_large) {
      const Vocab v = Vocab::Build(generic_corpus, Vocab::kMaxSize);
      generic_large = std::make_shared<NGramModel>(TrainNGram(
          generic_corpus, cfg.ngram_large_order, v, smoothing));
    }
    return generic_large;
  };
  auto ensure_pretrained = [&]() -> const RnnLm<float>& {
    if (!pretrained) {
      const Vocab v = UnionVocab(generic_corpus, domain_words);
      RnnConfig rc;
      rc.vocab_size = v.size();
      rc.embed_dim = cfg.rnn.embed_dim;
      rc.hidden_dim = cfg.rnn.hidden_dim;
      rc.num_layers = cfg.rnn.layers;
      const uint64_t s = DeriveSeed(cfg.seed, {kSeedPretrain});
      RnnLm<float> lm{InitRnn<float>(rc, s), v};
      TrainRnnLm(&lm, generic_corpus,
                 MakeTrainConfig(cfg.rnn, cfg.rnn.pretrain_epochs, s));
      pretrained = std::move(lm);
    }
    return *pretrained;
  };

  ExperimentReport report;

  // Unadapted baseline: decode the channel with the generic small model
  // alone, no domain adaptation anywhere.
  {
    const std::filesystem::path file = cache_root / "baseline";
    if (std::optional<double> v = ReadCachedValue(file)) {
      report.baseline_wer = *v;
      ++report.cached;
    } else {
      const std::vector<NBestList> fp = FirstPassDecode(
          channel, *ensure_generic_small(), cfg.lm_weight, cfg.wip);
      std::vector<Command> hyps;
      hyps.reserve(fp.size());
      for (const NBestList& nb : fp) hyps.push_back(nb.hyps.front().text);
      report.baseline_wer = WerAgainst(eval_cmds, hyps);
      WriteCachedValue(file, report.baseline_wer);
      ++report.computed;
    }
  }

  // Cell values keyed by (row, size, fold) position in the config.
  std::vector<std::vector<std::vector<double>>> values(
      cfg.rows.size(),
      std::vector<std::vector<double>>(cfg.sizes.size(),
                                       std::vector<double>(cfg.folds, 0.0)));

  for (size_t si = 0; si < cfg.sizes.size(); ++si) {
    const uint64_t size = cfg.sizes[si];
    for (int fold = 0; fold < cfg.folds; ++fold) {
      const std::vector<Command>& train = *fold_of.at({size, fold});

      // Adapted models for this training cell, each built on first use
      // and shared by the rows that need it.
      std::optional<Automaton> fsg;
      std::optional<MixtureModel> small, large;
      std::optional<RnnLm<float>> finetuned;
      std::optional<std::vector<NBestList>> firstpass;
      std::map<std::string, RnnLm<float>> mm_models;

      auto ensure_small = [&]() -> const MixtureModel& {
        if (!small) {
          const Vocab v = UnionVocab(train, domain_words);
          auto dom = std::make_shared<NGramModel>(
              TrainNGram(train, cfg.ngram_small_order, v, smoothing));
          small = Interpolate(dom, ensure_generic_small(), cfg.lambda_domain);
        }
        return *small;
      };
      auto ensure_large = [&]() -> const MixtureModel& {
        if (!large) {
          const Vocab v = UnionVocab(train, domain_words);
          auto dom = std::make_shared<NGramModel>(
              TrainNGram(train, cfg.ngram_large_order, v, smoothing));
          large = Interpolate(dom, ensure_generic_large(), cfg.lambda_domain);
        }
        return *large;
      };
      auto ensure_firstpass = [&]() -> const std::vector<NBestList>& {
        if (!firstpass)
          firstpass =
              FirstPassDecode(channel, ensure_small(), cfg.lm_weight, cfg.wip);
        return *firstpass;
      };
      auto ensure_finetuned = [&]() -> const RnnLm<float>& {
        if (!finetuned) {
          RnnLm<float> lm = ensure_pretrained();
          FinetuneRnnLm(
              &lm, train, cfg.rnn.finetune_epochs,
              MakeTrainConfig(cfg.rnn, cfg.rnn.finetune_epochs,
                              DeriveSeed(cfg.seed, {kSeedFinetune, size,
                                                    static_cast<uint64_t>(
                                                        fold)})));
          finetuned = std::move(lm);
        }
        return *finetuned;
      };
      auto ensure_mm = [&](const std::string& mode) -> const RnnLm<float>& {
        auto it = mm_models.find(mode);
        if (it != mm_models.end()) return it->second;
        const bool annotated = mode == "annotated";
        const uint64_t assoc_seed = DeriveSeed(
            cfg.seed, {annotated ? kSeedFoldAssocTruth : kSeedFoldAssocGen,
                       size, static_cast<uint64_t>(fold)});
        const uint64_t train_seed = DeriveSeed(
            cfg.seed, {annotated ? kSeedMmAnnotated : kSeedMmGenerated, size,
                       static_cast<uint64_t>(fold)});
        const AssociationTable assoc = Associate(
            train, annotated ? annotations : lexicon, index, assoc_seed);
        const std::vector<MmPair> pairs =
            MakeMmPairs(train, assoc, features, feat_dim);
        RnnLm<float> mm =
            AttachEncoder(ensure_finetuned(), feat_dim,
                          DeriveSeed(cfg.seed, {kSeedAttach}));
        MmTrain(&mm, pairs, MakeTrainConfig(cfg.rnn, cfg.rnn.mm_epochs,
                                            train_seed));
        return mm_models.emplace(mode, std::move(mm)).first->second;
      };

      auto decode_row = [&](const ExperimentRow& row) -> double {
        std::vector<Command> hyps;
        hyps.reserve(channel.size());
        if (row.decoder == "fsg") {
          if (!fsg) fsg = BuildFsgFromCorpus(train);
          for (const NBestList& nb : channel)
            hyps.push_back(FsgDecode(*fsg, nb));
          return WerAgainst(eval_cmds, hyps);
        }
        const std::vector<NBestList>& fp = ensure_firstpass();
        if (row.rescorer.empty() || row.rescorer == "none") {
          for (const NBestList& nb : fp) hyps.push_back(nb.hyps.front().text);
          return WerAgainst(eval_cmds, hyps);
        }
        RescoreConfig rc;
        rc.lm_weight = cfg.lm_weight;
        rc.word_insertion_penalty = cfg.wip;
        rc.replace_firstpass_lm = cfg.replace_firstpass_lm;
        for (size_t i = 0; i < fp.size(); ++i) {
          SentenceScorer scorer;
          if (row.rescorer == "ngram-large") {
            const MixtureModel& lm = ensure_large();
            scorer = [&lm](const Command& c) { return NgramScoreLn(lm, c); };
          } else if (row.rescorer == "rnn") {
            const RnnLm<float>& lm = ensure_finetuned();
            scorer = [&lm](const Command& c) {
              return SentenceLogProbLn(lm, c);
            };
          } else {
            const RnnLm<float>& lm = ensure_mm(row.assoc);
            const std::vector<double>& feat = eval_feats[i];
            scorer = [&lm, &feat](const Command& c) {
              return MmScore(lm, c, feat);
            };
          }
          hyps.push_back(OneBest(Rescore(fp[i], scorer, rc)));
        }
        return WerAgainst(eval_cmds, hyps);
      };

      for (size_t ri = 0; ri < cfg.rows.size(); ++ri) {
        const ExperimentRow& row = cfg.rows[ri];
        const std::string label = row.Label();
        char name[160];
        std::snprintf(name, sizeof name, "%s_n%llu_f%d", label.c_str(),
                      static_cast<unsigned long long>(size), fold);
        const std::filesystem::path file = cache_root / name;
        if (std::optional<double> v = ReadCachedValue(file)) {
          values[ri][si][fold] = *v;
          ++report.cached;
          continue;
        }
        try {
          values[ri][si][fold] = decode_row(row);
        } catch (const DivergenceError& e) {
          throw DivergenceError(CellCoord(label, size, fold) + e.what());
        } catch (const DataError& e) {
          throw DataError(CellCoord(label, size, fold) + e.what());
        }
        WriteCachedValue(file, values[ri][si][fold]);
        ++report.computed;
      }
    }
  }

  for (size_t ri = 0; ri < cfg.rows.size(); ++ri) {
    const std::string label = cfg.rows[ri].Label();
    for (size_t si = 0; si < cfg.sizes.size(); ++si) {
      for (int fold = 0; fold < cfg.folds; ++fold) {
        ExperimentCell cell;
        cell.system = label;
        cell.size = cfg.sizes[si];
        cell.fold = fold;
        cell.wer = values[ri][si][fold];
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

namespace {

std::string PadRight(const std::string& s, size_t width) {
  std::string out = s;
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

}  // namespace

std::string RenderReport(const ExperimentConfig& cfg,
                         const ExperimentReport& report) {
  // Fold values per (system, size), in fold order.
  std::map<std::string, std::map<uint64_t, std::vector<double>>> by_cell;
  for (const ExperimentCell& c : report.cells)
    by_cell[c.system][c.size].push_back(c.wer);

  std::string out;
  char buf[200];
  out += "simulated-channel adaptation, wer percent, mean +/- 2 se over folds\n";
  std::snprintf(buf, sizeof buf,
                "seed %llu  folds %d  eval %d  nbest %d  noise %.3g  "
                "lm-weight %.3g\n",
                static_cast<unsigned long long>(cfg.seed), cfg.folds,
                cfg.eval_size, cfg.nbest_size, cfg.score_noise,
                cfg.lm_weight);
  out += buf;
  std::snprintf(buf, sizeof buf, "unadapted generic decode: %.2f\n\n",
                100.0 * report.baseline_wer);
  out += buf;

  size_t width = std::strlen("system");
  for (const ExperimentRow& r : cfg.rows)
    width = std::max(width, r.Label().size());

  out += PadRight("system", width);
  for (uint64_t size : cfg.sizes) {
    char head[32];
    std::snprintf(head, sizeof head, "n=%llu",
                  static_cast<unsigned long long>(size));
    std::snprintf(buf, sizeof buf, "  %16s", head);
    out += buf;
  }
  out += "\n";

  for (const ExperimentRow& r : cfg.rows) {
    const std::string label = r.Label();
    out += PadRight(label, width);
    for (uint64_t size : cfg.sizes) {
      const FoldAggregate agg = AggregateFolds(by_cell.at(label).at(size));
      std::snprintf(buf, sizeof buf, "  %6.2f +/- %5.2f", 100.0 * agg.mean,
                    100.0 * agg.spread);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string RenderCellsTsv(const ExperimentReport& report) {
  std::string out = "system\tn\tfold\twer\n";
  char buf[160];
  for (const ExperimentCell& c : report.cells) {
    std::snprintf(buf, sizeof buf, "%s\t%llu\t%d\t%.6f\n", c.system.c_str(),
                  static_cast<unsigned long long>(c.size), c.fold, c.wer);
    out += buf;
  }
  return out;
}

}  // namespace cmdlm
