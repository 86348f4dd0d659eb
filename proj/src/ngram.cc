// ngram.cc
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

#include "cmdlm/ngram.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cmdlm {

namespace {

constexpr double kLogZero = -99.0;  // conventional stand-in for -inf

GramKey ContextOf(GramKey key) { return key >> 16; }

int32_t LastWordOf(GramKey key) {
  return static_cast<int32_t>(key & 0xffff) - 1;
}

int32_t FirstWordOf(GramKey key, int n) {
  return static_cast<int32_t>((key >> (16 * (n - 1))) & 0xffff) - 1;
}

std::vector<int32_t> UnpackGram(GramKey key, int n) {
  std::vector<int32_t> ids(static_cast<size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    ids[static_cast<size_t>(i)] = static_cast<int32_t>(key & 0xffff) - 1;
    key >>= 16;
  }
  return ids;
}

}  // namespace

GramKey PackGram(const int32_t* ids, int n) {
  GramKey key = 0;
  for (int i = 0; i < n; ++i) {
    key = (key << 16) | static_cast<GramKey>(ids[i] + 1);
  }
  return key;
}

GramKey PackGram(const std::vector<int32_t>& ids) {
  return PackGram(ids.data(), static_cast<int>(ids.size()));
}

Smoothing ParseSmoothing(const std::string& name) {
  if (name == "witten-bell") return Smoothing::kWittenBell;
  if (name == "kneser-ney") return Smoothing::kKneserNey;
  throw DataError("unknown smoothing: " + name +
                  " (expected witten-bell or kneser-ney)");
}

NGramCounts CountNGrams(const std::vector<Command>& corpus, int order,
                        const Vocab& vocab) {
  if (order < 1 || order > kMaxOrder) {
    throw DataError("n-gram order must be between 1 and 4");
  }
  if (corpus.empty()) throw DataError("cannot count n-grams of an empty corpus");

  NGramCounts counts;
  counts.order = order;
  counts.per_order.resize(static_cast<size_t>(order));
  for (const Command& sentence : corpus) {
    std::vector<int32_t> ids;
    ids.reserve(sentence.size() + 2);
    ids.push_back(Vocab::kBos);
    for (const std::string& w : sentence) ids.push_back(vocab.Id(w));
    ids.push_back(Vocab::kEos);

    const int len = static_cast<int>(ids.size());
    for (int n = 1; n <= order; ++n) {
      for (int start = 0; start + n <= len; ++start) {
        if (n == 1 && ids[static_cast<size_t>(start)] == Vocab::kBos) continue;
        ++counts.per_order[static_cast<size_t>(n - 1)]
              [PackGram(ids.data() + start, n)];
      }
    }
  }
  return counts;
}

NGramModel::NGramModel(int order, Vocab vocab)
    : order_(order), vocab_(std::move(vocab)) {
  if (order < 1 || order > kMaxOrder) {
    throw DataError("n-gram order must be between 1 and 4");
  }
  tables_.resize(static_cast<size_t>(order));
}

const std::map<GramKey, NGramModel::Entry>& NGramModel::table(int n) const {
  if (n < 1 || n > order_) throw DataError("n-gram table order out of range");
  return tables_[static_cast<size_t>(n - 1)];
}

std::map<GramKey, NGramModel::Entry>& NGramModel::mutable_table(int n) {
  if (n < 1 || n > order_) throw DataError("n-gram table order out of range");
  return tables_[static_cast<size_t>(n - 1)];
}

uint64_t NGramModel::TotalNGrams() const {
  uint64_t total = 0;
  for (const auto& t : tables_) total += t.size();
  return total;
}

double NGramModel::CondLogProbIds(const std::vector<int32_t>& context,
                                  int32_t word) const {
  if (word < 0 || word >= vocab_.size()) word = Vocab::kUnk;
  const int len = std::min(static_cast<int>(context.size()), order_ - 1);
  const int32_t* ctx = context.data() + context.size() - len;

  double bow_sum = 0.0;
  int32_t buf[kMaxOrder];
  for (int n = len; n >= 0; --n) {
    // Try the (n+1)-gram made of the last n context words plus word.
    for (int i = 0; i < n; ++i) buf[i] = ctx[len - n + i];
    buf[n] = word;
    const auto& tbl = tables_[static_cast<size_t>(n)];
    auto it = tbl.find(PackGram(buf, n + 1));
    if (it != tbl.end()) return it->second.logp + bow_sum;
    if (n > 0) {
      const auto& hosts = tables_[static_cast<size_t>(n - 1)];
      auto host = hosts.find(PackGram(ctx + len - n, n));
      if (host != hosts.end() && host->second.has_bow) {
        bow_sum += host->second.bow;
      }
    }
  }
  // Unigram absent: only possible for models loaded from incomplete ARPA.
  return bow_sum + kLogZero;
}

double NGramModel::CondLogProb(const std::vector<std::string>& context,
                               const std::string& word) const {
  std::vector<int32_t> ids;
  ids.reserve(context.size());
  for (const std::string& w : context) ids.push_back(vocab_.Id(w));
  return CondLogProbIds(ids, vocab_.Id(word));
}

namespace {

// Recomputes the backoff weights of every (child_order-1)-gram from the
// stored child probabilities:
//   bow(ctx) = (1 - sum_observed p(w|ctx)) / (1 - sum_observed p(w|ctx'))
// where ctx' drops the first context word.  Hosts without children lose
// their weight.  Lower-order tables must already be final.
void RecomputeBowsAtOrder(NGramModel* m, int child_order) {
  auto& hosts = m->mutable_table(child_order - 1);
  for (auto& [key, entry] : hosts) entry.has_bow = false;

  const auto& children = m->table(child_order);
  auto it = children.begin();
  while (it != children.end()) {
    const GramKey ctx = ContextOf(it->first);
    double sum_p = 0.0;
    double sum_lower = 0.0;
    std::vector<int32_t> ctx_ids = UnpackGram(ctx, child_order - 1);
    std::vector<int32_t> lower_ctx(ctx_ids.begin() + 1, ctx_ids.end());
    for (; it != children.end() && ContextOf(it->first) == ctx; ++it) {
      sum_p += std::pow(10.0, it->second.logp);
      sum_lower +=
          std::pow(10.0, m->CondLogProbIds(lower_ctx, LastWordOf(it->first)));
    }
    auto host = hosts.find(ctx);
    if (host == hosts.end()) {
      throw DataError("internal: backoff context has no host n-gram");
    }
    const double num = std::max(1.0 - sum_p, 1e-15);
    const double den = std::max(1.0 - sum_lower, 1e-15);
    host->second.bow = std::log10(num / den);
    host->second.has_bow = true;
  }
}

struct Discount {
  bool needed = false;
  double d = 0.0;
};

Discount KneserNeyDiscount(const std::map<GramKey, uint64_t>& counts,
                           int order) {
  Discount out;
  if (counts.empty()) return out;
  uint64_t n1 = 0, n2 = 0;
  for (const auto& [key, c] : counts) {
    if (c == 1) ++n1;
    if (c == 2) ++n2;
  }
  if (n1 == 0) {
    throw DataError(
        "kneser-ney discount statistics are degenerate at order " +
        std::to_string(order) + " (no singleton counts); use witten-bell");
  }
  out.needed = true;
  out.d = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
  return out;
}

}  // namespace

NGramModel EstimateNGram(const NGramCounts& counts, const Vocab& vocab,
                         Smoothing smoothing) {
  const int order = counts.order;
  if (order < 1 || static_cast<int>(counts.per_order.size()) != order) {
    throw DataError("malformed n-gram counts");
  }
  if (counts.per_order[0].empty()) {
    throw DataError("cannot estimate a model from empty counts");
  }

  // Counts actually fed to the estimator.  Witten-Bell uses raw counts at
  // every order.  Kneser-Ney replaces them below the top order with
  // continuation counts (distinct left extensions), except for n-grams
  // starting at the sentence boundary, which have no left extensions.
  std::vector<std::map<GramKey, uint64_t>> used = counts.per_order;
  std::vector<Discount> discount(static_cast<size_t>(order));
  if (smoothing == Smoothing::kKneserNey) {
    for (int n = order - 1; n >= 1; --n) {
      std::map<GramKey, uint64_t> continuation;
      const GramKey mask = (GramKey(1) << (16 * n)) - 1;
      for (const auto& [key, c] : counts.per_order[static_cast<size_t>(n)]) {
        ++continuation[key & mask];
      }
      for (auto& [key, c] : used[static_cast<size_t>(n - 1)]) {
        if (FirstWordOf(key, n) == Vocab::kBos) continue;
        auto it = continuation.find(key);
        if (it != continuation.end()) c = it->second;
      }
    }
    for (int n = 1; n <= order; ++n) {
      discount[static_cast<size_t>(n - 1)] =
          KneserNeyDiscount(used[static_cast<size_t>(n - 1)], n);
    }
  }

  NGramModel model(order, vocab);
  const double uniform = 1.0 / static_cast<double>(vocab.predictable_size());

  // Unigrams: the whole event space is stored, so unseen words (the
  // unknown token in particular) keep the uniform share of the held-out
  // mass and every later backoff terminates.
  {
    const auto& uni = used[0];
    double total = 0.0;
    for (const auto& [key, c] : uni) total += static_cast<double>(c);
    const double k = static_cast<double>(uni.size());
    auto& table = model.mutable_table(1);
    for (int32_t id = 0; id < vocab.size(); ++id) {
      if (id == Vocab::kBos) continue;
      const GramKey key = PackGram(&id, 1);
      auto it = uni.find(key);
      const double c = it == uni.end() ? 0.0 : static_cast<double>(it->second);
      double p;
      if (smoothing == Smoothing::kWittenBell) {
        p = c / (total + k) + k / (total + k) * uniform;
      } else {
        const double d = discount[0].d;
        p = std::max(c - d, 0.0) / total + d * k / total * uniform;
      }
      NGramModel::Entry entry;
      entry.logp = std::log10(p);
      entry.count = it == uni.end() ? 0 : it->second;
      table[key] = entry;
    }
    NGramModel::Entry bos;
    bos.logp = kLogZero;
    table[PackGram(&Vocab::kBos, 1)] = bos;
  }

  for (int n = 2; n <= order; ++n) {
    const auto& cnt = used[static_cast<size_t>(n - 1)];
    auto& table = model.mutable_table(n);
    auto it = cnt.begin();
    while (it != cnt.end()) {
      const GramKey ctx = ContextOf(it->first);
      double total = 0.0;
      uint64_t k = 0;
      for (auto probe = it; probe != cnt.end() && ContextOf(probe->first) == ctx;
           ++probe) {
        total += static_cast<double>(probe->second);
        ++k;
      }
      std::vector<int32_t> ctx_ids = UnpackGram(ctx, n - 1);
      std::vector<int32_t> lower_ctx(ctx_ids.begin() + 1, ctx_ids.end());
      for (; it != cnt.end() && ContextOf(it->first) == ctx; ++it) {
        const double c = static_cast<double>(it->second);
        const double p_lower = std::pow(
            10.0, model.CondLogProbIds(lower_ctx, LastWordOf(it->first)));
        double p;
        if (smoothing == Smoothing::kWittenBell) {
          const double kk = static_cast<double>(k);
          p = c / (total + kk) + kk / (total + kk) * p_lower;
        } else {
          const double d = discount[static_cast<size_t>(n - 1)].d;
          p = std::max(c - d, 0.0) / total +
              d * static_cast<double>(k) / total * p_lower;
        }
        NGramModel::Entry entry;
        entry.logp = std::log10(p);
        entry.count = it->second;
        table[it->first] = entry;
      }
    }
    RecomputeBowsAtOrder(&model, n);
  }
  return model;
}

NGramModel TrainNGram(const std::vector<Command>& corpus, int order,
                      const Vocab& vocab, Smoothing smoothing) {
  return EstimateNGram(CountNGrams(corpus, order, vocab), vocab, smoothing);
}

MixtureModel::MixtureModel(
    std::vector<std::shared_ptr<const NGramModel>> components,
    std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty() || components_.size() != weights_.size()) {
    throw DataError("mixture needs matching components and weights");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (w < 0.0) throw DataError("mixture weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw DataError("mixture weights must sum to 1");
  }
}

double MixtureModel::CondLogProb(const std::vector<std::string>& context,
                                 const std::string& word) const {
  double p = 0.0;
  for (size_t i = 0; i < components_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    p += weights_[i] * std::pow(10.0, components_[i]->CondLogProb(context, word));
  }
  return std::log10(p);
}

const Vocab& MixtureModel::vocab() const { return components_[0]->vocab(); }

MixtureModel Interpolate(std::shared_ptr<const NGramModel> domain,
                         std::shared_ptr<const NGramModel> generic,
                         double lambda_domain) {
  if (lambda_domain < 0.0 || lambda_domain > 1.0) {
    throw DataError("interpolation coefficient must lie in [0, 1]");
  }
  return MixtureModel({std::move(domain), std::move(generic)},
                      {lambda_domain, 1.0 - lambda_domain});
}

NGramModel Prune(const NGramModel& m, uint64_t max_ngrams) {
  const uint64_t unigrams = m.table(1).size();
  if (max_ngrams < unigrams) {
    throw DataError("pruning budget is below the unigram count");
  }
  NGramModel out = m;
  const uint64_t total = out.TotalNGrams();
  if (total <= max_ngrams) return out;

  uint64_t excess = total - max_ngrams;
  for (int n = out.order(); n >= 2 && excess > 0; --n) {
    std::set<GramKey> live_contexts;
    if (n < out.order()) {
      for (const auto& [key, entry] : out.table(n + 1)) {
        live_contexts.insert(ContextOf(key));
      }
    }
    struct Candidate {
      uint64_t count;
      double logp;
      GramKey key;
    };
    std::vector<Candidate> eligible;
    for (const auto& [key, entry] : out.table(n)) {
      if (!live_contexts.count(key)) {
        eligible.push_back({entry.count, entry.logp, key});
      }
    }
    std::sort(eligible.begin(), eligible.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.count != b.count) return a.count < b.count;
                if (a.logp != b.logp) return a.logp < b.logp;
                return a.key < b.key;
              });
    const size_t drop = std::min<uint64_t>(excess, eligible.size());
    auto& table = out.mutable_table(n);
    for (size_t i = 0; i < drop; ++i) table.erase(eligible[i].key);
    excess -= drop;
  }
  if (excess > 0) {
    throw DataError("pruning budget is infeasible");
  }
  for (int n = 2; n <= out.order(); ++n) RecomputeBowsAtOrder(&out, n);
  return out;
}

double SentenceLogProb10(const ConditionalModel& m, const Command& sentence) {
  std::vector<std::string> context = {Vocab::kBosWord};
  double total = 0.0;
  for (const std::string& w : sentence) {
    total += m.CondLogProb(context, w);
    context.push_back(w);
  }
  total += m.CondLogProb(context, Vocab::kEosWord);
  return total;
}

double Perplexity(const ConditionalModel& m,
                  const std::vector<Command>& corpus) {
  if (corpus.empty()) throw DataError("cannot compute perplexity of nothing");
  double total = 0.0;
  uint64_t tokens = 0;
  for (const Command& sentence : corpus) {
    total += SentenceLogProb10(m, sentence);
    tokens += sentence.size() + 1;  // end of sentence is a predicted token
  }
  return std::pow(10.0, -total / static_cast<double>(tokens));
}

double NextWordProbSum(const ConditionalModel& m,
                       const std::vector<std::string>& context) {
  double sum = 0.0;
  for (const std::string& w : m.vocab().PredictableWords()) {
    sum += std::pow(10.0, m.CondLogProb(context, w));
  }
  return sum;
}

std::string ArpaWrite(const NGramModel& m) {
  std::ostringstream out;
  out << "\\data\\\n";
  for (int n = 1; n <= m.order(); ++n) {
    out << "ngram " << n << "=" << m.table(n).size() << "\n";
  }
  char buf[64];
  for (int n = 1; n <= m.order(); ++n) {
    out << "\n\\" << n << "-grams:\n";
    for (const auto& [key, entry] : m.table(n)) {
      std::snprintf(buf, sizeof(buf), "%.6f", entry.logp);
      out << buf;
      const std::vector<int32_t> ids = UnpackGram(key, n);
      for (size_t i = 0; i < ids.size(); ++i) {
        out << (i == 0 ? "\t" : " ") << m.vocab().Word(ids[i]);
      }
      if (entry.has_bow) {
        std::snprintf(buf, sizeof(buf), "%.6f", entry.bow);
        out << "\t" << buf;
      }
      out << "\n";
    }
  }
  out << "\n\\end\\\n";
  return out.str();
}

namespace {

std::vector<std::string> SplitFields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string f;
  while (in >> f) fields.push_back(f);
  return fields;
}

}  // namespace

NGramModel ArpaRead(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> DataError {
    return DataError("arpa parse error at line " + std::to_string(lineno) +
                     ": " + msg);
  };
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };

  if (!next_line() || line != "\\data\\") {
    throw fail("expected \\data\\ header");
  }

  std::vector<uint64_t> declared;
  while (next_line() && line.rfind("ngram ", 0) == 0) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("malformed ngram count line");
    const int n = std::stoi(line.substr(6, eq - 6));
    if (n != static_cast<int>(declared.size()) + 1) {
      throw fail("ngram counts out of order");
    }
    declared.push_back(std::stoull(line.substr(eq + 1)));
  }
  const int order = static_cast<int>(declared.size());
  if (order < 1 || order > kMaxOrder) {
    throw fail("unsupported n-gram order");
  }

  // First pass through the 1-grams section collects the vocabulary; the
  // current line is already the first section header.
  struct RawEntry {
    double logp;
    std::vector<std::string> words;
    double bow;
    bool has_bow;
  };
  std::vector<std::vector<RawEntry>> sections(static_cast<size_t>(order));
  std::vector<std::string> vocab_words;
  for (int n = 1; n <= order; ++n) {
    const std::string header = "\\" + std::to_string(n) + "-grams:";
    if (line != header) throw fail("expected " + header);
    auto& section = sections[static_cast<size_t>(n - 1)];
    while (next_line() && line[0] != '\\') {
      std::vector<std::string> fields = SplitFields(line);
      if (fields.size() != static_cast<size_t>(n) + 1 &&
          fields.size() != static_cast<size_t>(n) + 2) {
        throw fail("wrong field count in " + std::to_string(n) + "-gram");
      }
      RawEntry e;
      try {
        e.logp = std::stod(fields[0]);
      } catch (const std::exception&) {
        throw fail("bad log probability: " + fields[0]);
      }
      e.has_bow = fields.size() == static_cast<size_t>(n) + 2;
      if (e.has_bow) {
        try {
          e.bow = std::stod(fields.back());
        } catch (const std::exception&) {
          throw fail("bad backoff weight: " + fields.back());
        }
      } else {
        e.bow = 0.0;
      }
      e.words.assign(fields.begin() + 1,
                     fields.begin() + 1 + static_cast<size_t>(n));
      if (n == 1) vocab_words.push_back(e.words[0]);
      section.push_back(std::move(e));
    }
    if (section.size() != declared[static_cast<size_t>(n - 1)]) {
      throw fail("section size disagrees with the \\data\\ declaration");
    }
  }
  if (line != "\\end\\") throw fail("expected \\end\\");

  NGramModel model(order, Vocab::FromWords(vocab_words));
  const Vocab& vocab = model.vocab();
  for (int n = 1; n <= order; ++n) {
    auto& table = model.mutable_table(n);
    for (const RawEntry& raw : sections[static_cast<size_t>(n - 1)]) {
      std::vector<int32_t> ids;
      for (const std::string& w : raw.words) {
        if (!vocab.Contains(w)) {
          throw DataError("arpa: " + std::to_string(n) + "-gram uses word '" +
                          w + "' missing from the unigram section");
        }
        ids.push_back(vocab.Id(w));
      }
      NGramModel::Entry entry;
      entry.logp = raw.logp;
      entry.bow = raw.bow;
      entry.has_bow = raw.has_bow;
      table[PackGram(ids)] = entry;
    }
    if (table.size() != sections[static_cast<size_t>(n - 1)].size()) {
      throw DataError("arpa: duplicate " + std::to_string(n) + "-gram");
    }
  }
  return model;
}

void ArpaWriteFile(const std::string& path, const NGramModel& m) {
  WriteTextFile(path, ArpaWrite(m));
}

NGramModel ArpaReadFile(const std::string& path) {
  try {
    return ArpaRead(ReadTextFile(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::unique_ptr<ConditionalModel> LoadModelFile(const std::string& path) {
  const std::string text = ReadTextFile(path);
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json spec;
    try {
      spec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ": bad mixture spec: " + e.what());
    }
    if (!spec.contains("lambda") || !spec.contains("domain") ||
        !spec.contains("generic")) {
      throw DataError(path + ": mixture spec needs lambda, domain, generic");
    }
    const auto dir = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
      return std::filesystem::path(p).is_absolute() ? p : (dir / p).string();
    };
    auto domain = std::make_shared<const NGramModel>(
        ArpaReadFile(resolve(spec["domain"].get<std::string>())));
    auto generic = std::make_shared<const NGramModel>(
        ArpaReadFile(resolve(spec["generic"].get<std::string>())));
    return std::make_unique<MixtureModel>(
        Interpolate(domain, generic, spec["lambda"].get<double>()));
  }
  return std::make_unique<NGramModel>(ArpaRead(text));
}

void WriteMixtureFile(const std::string& path, const std::string& domain_path,
                      const std::string& generic_path, double lambda_domain) {
  if (lambda_domain < 0.0 || lambda_domain > 1.0) {
    throw DataError("interpolation coefficient must lie in [0, 1]");
  }
  nlohmann::json spec;
  spec["lambda"] = lambda_domain;
  spec["domain"] = domain_path;
  spec["generic"] = generic_path;
  WriteTextFile(path, spec.dump(2) + "\n");
}

}  // namespace cmdlm
