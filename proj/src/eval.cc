// eval.cc
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

#include "cmdlm/eval.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace cmdlm {

namespace {

bool SameWord(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

// P(X <= k) for X ~ Binomial(n, 1/2).  Exact in double for n <= 40 or so;
// the exact branch only needs n < 25 and the agreement fixture n <= 40.
double BinomialCdfHalf(int64_t k, int64_t n) {
  double coeff = 1.0;  // C(n, 0)
  double sum = 0.0;
  for (int64_t i = 0; i <= k; ++i) {
    if (i > 0) coeff = coeff * static_cast<double>(n - i + 1) /
                       static_cast<double>(i);
    sum += coeff;
  }
  return sum * std::pow(0.5, static_cast<double>(n));
}

// Upper tail of the 1-df chi-square distribution.
double ChiSquareTail1(double x) {
  return std::erfc(std::sqrt(x / 2.0));
}

}  // namespace

std::vector<EditOp> Align(const Command& ref, const Command& hyp) {
  if (ref.empty()) throw DataError("cannot align an empty reference");
  const size_t m = ref.size();
  const size_t n = hyp.size();
  std::vector<std::vector<int32_t>> d(m + 1, std::vector<int32_t>(n + 1));
  for (size_t i = 0; i <= m; ++i) d[i][0] = static_cast<int32_t>(i);
  for (size_t j = 0; j <= n; ++j) d[0][j] = static_cast<int32_t>(j);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j) {
      const int32_t sub =
          d[i - 1][j - 1] + (SameWord(ref[i - 1], hyp[j - 1]) ? 0 : 1);
      const int32_t del = d[i - 1][j] + 1;
      const int32_t ins = d[i][j - 1] + 1;
      d[i][j] = std::min({sub, del, ins});
    }
  }

  // Backtrace with the fixed preference makes the trace deterministic.
  std::vector<EditOp> ops;
  size_t i = m;
  size_t j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = SameWord(ref[i - 1], hyp[j - 1]);
      if (d[i][j] == d[i - 1][j - 1] + (same ? 0 : 1)) {
        ops.push_back(same ? EditOp::kMatch : EditOp::kSubstitute);
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ops.push_back(EditOp::kDelete);
      --i;
      continue;
    }
    ops.push_back(EditOp::kInsert);
    --j;
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

double WerResult::Wer() const {
  if (ref_words <= 0) throw DataError("word error rate needs reference words");
  return static_cast<double>(Edits()) / static_cast<double>(ref_words);
}

WerResult ScorePair(const Command& ref, const Command& hyp) {
  WerResult r;
  for (EditOp op : Align(ref, hyp)) {
    switch (op) {
      case EditOp::kMatch:
        break;
      case EditOp::kSubstitute:
        ++r.substitutions;
        break;
      case EditOp::kDelete:
        ++r.deletions;
        break;
      case EditOp::kInsert:
        ++r.insertions;
        break;
    }
  }
  r.ref_words = static_cast<int64_t>(ref.size());
  return r;
}

WerResult CorpusWer(
    const std::vector<std::pair<Command, Command>>& ref_hyp_pairs) {
  if (ref_hyp_pairs.empty())
    throw DataError("corpus word error rate needs at least one pair");
  WerResult total;
  for (const auto& [ref, hyp] : ref_hyp_pairs) {
    const WerResult r = ScorePair(ref, hyp);
    total.substitutions += r.substitutions;
    total.deletions += r.deletions;
    total.insertions += r.insertions;
    total.ref_words += r.ref_words;
  }
  return total;
}

McNemarResult McNemar(const std::vector<bool>& correct_a,
                      const std::vector<bool>& correct_b) {
  if (correct_a.size() != correct_b.size())
    throw DataError("mcnemar requires aligned correctness vectors");
  McNemarResult r;
  for (size_t i = 0; i < correct_a.size(); ++i) {
    if (!correct_a[i] && correct_b[i]) ++r.b;
    if (correct_a[i] && !correct_b[i]) ++r.c;
  }
  const int64_t nd = r.b + r.c;
  if (nd == 0) {
    r.p_value = 1.0;
    r.significant = false;
    return r;
  }
  const double diff = std::abs(static_cast<double>(r.b - r.c));
  const double corrected = std::max(diff - 1.0, 0.0);
  r.statistic = corrected * corrected / static_cast<double>(nd);
  if (nd < 25) {
    r.exact = true;
    r.p_value = std::min(1.0, 2.0 * BinomialCdfHalf(std::min(r.b, r.c), nd));
  } else {
    r.p_value = ChiSquareTail1(r.statistic);
  }
  r.significant = r.p_value < 0.05;
  return r;
}

FoldAggregate AggregateFolds(const std::vector<double>& values) {
  if (values.empty()) throw DataError("fold aggregation needs values");
  FoldAggregate agg;
  agg.values = values;
  for (double v : values) agg.mean += v;
  agg.mean /= static_cast<double>(values.size());
  if (values.size() == 1) {
    agg.degenerate = true;
    return agg;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  agg.spread = 2.0 * sd / std::sqrt(static_cast<double>(values.size()));
  return agg;
}

std::vector<std::pair<std::string, Command>> ReadTranscriptFile(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open transcript file: " + path);
  std::vector<std::pair<std::string, Command>> entries;
  std::map<std::string, size_t> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      std::ostringstream msg;
      msg << "transcript line needs utt_id<TAB>text at " << path << ":"
          << line_no;
      throw DataError(msg.str());
    }
    const std::string id = line.substr(0, tab);
    if (seen.count(id)) {
      std::ostringstream msg;
      msg << "duplicate utterance id '" << id << "' at " << path << ":"
          << line_no;
      throw DataError(msg.str());
    }
    seen[id] = line_no;
    entries.emplace_back(id, SplitWords(line.substr(tab + 1)));
  }
  return entries;
}

void WriteTranscriptFile(
    const std::string& path,
    const std::vector<std::pair<std::string, Command>>& entries) {
  std::ostringstream os;
  for (const auto& [id, text] : entries)
    os << id << '\t' << JoinWords(text) << '\n';
  WriteTextFile(path, os.str());
}

std::vector<std::pair<Command, Command>> PairTranscripts(
    const std::vector<std::pair<std::string, Command>>& ref,
    const std::vector<std::pair<std::string, Command>>& hyp) {
  std::map<std::string, const Command*> by_id;
  for (const auto& [id, text] : hyp) by_id.emplace(id, &text);
  if (by_id.size() != ref.size())
    throw DataError("reference and hypothesis utterance counts differ");
  std::vector<std::pair<Command, Command>> pairs;
  pairs.reserve(ref.size());
  for (const auto& [id, text] : ref) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw DataError("no hypothesis for utterance '" + id + "'");
    pairs.emplace_back(text, *it->second);
  }
  return pairs;
}

}  // namespace cmdlm
