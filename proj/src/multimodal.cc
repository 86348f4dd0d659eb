// multimodal.cc
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

#include "cmdlm/multimodal.h"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cmdlm {

template <typename Scalar>
RnnLm<Scalar> AttachEncoder(const RnnLm<Scalar>& base, int32_t feat_dim,
                            uint64_t seed) {
  (void)seed;
  if (feat_dim <= 0)
    throw DataError("attach_encoder: feature dimension must be positive");
  if (base.params.config.feat_dim > 0)
    throw DataError("attach_encoder: model already has a feature projection");
  RnnConfig cfg = base.params.config;
  cfg.feat_dim = feat_dim;
  RnnLm<Scalar> mm;
  mm.vocab = base.vocab;
  mm.params = ZeroRnn<Scalar>(cfg);
  mm.params.embedding = base.params.embedding;
  mm.params.w = base.params.w;
  mm.params.b = base.params.b;
  mm.params.out_proj = base.params.out_proj;
  mm.params.out_bias = base.params.out_bias;
  // wh, bh, wc, bc stay zero: the attached model must score exactly like
  // the base until the projection is trained.
  return mm;
}

template <typename Scalar>
double MmScore(const RnnLm<Scalar>& lm, const Command& sentence,
               const std::vector<double>& feature) {
  return SentenceLogProbLn(lm, sentence, feature);
}

namespace {

std::vector<TrainSequence> PairSequences(const Vocab& vocab,
                                         const std::vector<MmPair>& pairs) {
  std::vector<TrainSequence> data;
  data.reserve(pairs.size());
  for (const MmPair& pair : pairs)
    data.push_back(MakeSequence(vocab, pair.command, pair.feature));
  return data;
}

}  // namespace

template <typename Scalar>
std::vector<double> MmTrain(RnnLm<Scalar>* lm, const std::vector<MmPair>& pairs,
                            const TrainConfig& tc) {
  if (pairs.empty()) throw DataError("paired training corpus is empty");
  return TrainRnn(&lm->params, PairSequences(lm->vocab, pairs), tc);
}

template <typename Scalar>
std::vector<double> MmFinetune(RnnLm<Scalar>* lm,
                               const std::vector<MmPair>& pairs, int epochs,
                               TrainConfig tc) {
  tc.epochs = epochs;
  return MmTrain(lm, pairs, tc);
}

template <typename Scalar>
double MmPerplexity(const RnnLm<Scalar>& lm, const std::vector<MmPair>& pairs) {
  if (pairs.empty()) throw DataError("perplexity corpus is empty");
  double log_sum = 0.0;
  size_t tokens = 0;
  for (const MmPair& pair : pairs) {
    log_sum += MmScore(lm, pair.command, pair.feature);
    tokens += pair.command.size() + 1;
  }
  return std::exp(-log_sum / static_cast<double>(tokens));
}

FeatureMap ReadFeatureFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open feature file: " + path);
  FeatureMap features;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::ostringstream where;
    where << path << ":" << line_no;
    const size_t tab1 = line.find('\t');
    const size_t tab2 = tab1 == std::string::npos
                            ? std::string::npos
                            : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw DataError("feature record needs id, dimension and values at " +
                      where.str());
    const std::string id = line.substr(0, tab1);
    if (id.empty()) throw DataError("empty feature id at " + where.str());
    if (features.count(id))
      throw DataError("duplicate feature id '" + id + "' at " + where.str());
    long dim = 0;
    try {
      size_t used = 0;
      dim = std::stol(line.substr(tab1 + 1, tab2 - tab1 - 1), &used);
      if (used != tab2 - tab1 - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError("bad feature dimension at " + where.str());
    }
    if (dim <= 0) throw DataError("feature dimension must be positive at " +
                                  where.str());
    std::istringstream vs(line.substr(tab2 + 1));
    std::vector<double> values;
    double v = 0.0;
    while (vs >> v) {
      if (!std::isfinite(v))
        throw DataError("non-finite feature value at " + where.str());
      values.push_back(v);
    }
    if (!vs.eof())
      throw DataError("bad feature value at " + where.str());
    if (values.size() != static_cast<size_t>(dim)) {
      std::ostringstream msg;
      msg << "feature '" << id << "' declares " << dim << " values but has "
          << values.size() << " at " << where.str();
      throw DataError(msg.str());
    }
    features.emplace(id, std::move(values));
  }
  return features;
}

void WriteFeatureFile(const std::string& path, const FeatureMap& features) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write feature file: " + path);
  os.precision(17);
  for (const auto& [id, values] : features) {
    os << id << '\t' << values.size() << '\t';
    for (size_t k = 0; k < values.size(); ++k) {
      if (k) os << ' ';
      os << values[k];
    }
    os << '\n';
  }
  if (!os) throw DataError("failed writing feature file: " + path);
}

std::vector<PairRow> ReadPairRows(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open pair file: " + path);
  std::vector<PairRow> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    std::ostringstream where;
    where << path << ":" << line_no;
    if (tab == std::string::npos || tab == 0)
      throw DataError("pair record needs `id<TAB>sentence` at " + where.str());
    PairRow row;
    row.image_id = line.substr(0, tab);
    row.command = SplitWords(line.substr(tab + 1));
    if (row.command.empty())
      throw DataError("pair record has an empty sentence at " + where.str());
    rows.push_back(std::move(row));
  }
  return rows;
}

void WritePairRows(const std::string& path, const std::vector<PairRow>& rows) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write pair file: " + path);
  for (const PairRow& row : rows)
    os << row.image_id << '\t' << JoinWords(row.command) << '\n';
  if (!os) throw DataError("failed writing pair file: " + path);
}

std::vector<MmPair> ResolvePairs(const std::vector<PairRow>& rows,
                                 const FeatureMap& features, int32_t feat_dim,
                                 bool strict,
                                 std::vector<std::string>* missing) {
  if (feat_dim <= 0)
    throw DataError("feature dimension must be positive to resolve pairs");
  std::vector<MmPair> pairs;
  pairs.reserve(rows.size());
  for (const PairRow& row : rows) {
    MmPair pair;
    pair.command = row.command;
    pair.image_id = row.image_id;
    if (row.image_id == "NONE") {
      pair.feature.assign(feat_dim, 0.0);
    } else {
      const auto it = features.find(row.image_id);
      if (it == features.end()) {
        if (strict)
          throw DataError("no feature vector for image id '" + row.image_id +
                          "'");
        pair.feature.assign(feat_dim, 0.0);
        if (missing) missing->push_back(row.image_id);
      } else {
        if (static_cast<int32_t>(it->second.size()) != feat_dim) {
          std::ostringstream msg;
          msg << "feature '" << row.image_id << "' has dimension "
              << it->second.size() << ", expected " << feat_dim;
          throw DataError(msg.str());
        }
        pair.feature = it->second;
      }
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

template RnnLm<float> AttachEncoder<float>(const RnnLm<float>&, int32_t,
                                           uint64_t);
template RnnLm<double> AttachEncoder<double>(const RnnLm<double>&, int32_t,
                                             uint64_t);
template double MmScore<float>(const RnnLm<float>&, const Command&,
                               const std::vector<double>&);
template double MmScore<double>(const RnnLm<double>&, const Command&,
                                const std::vector<double>&);
template std::vector<double> MmTrain<float>(RnnLm<float>*,
                                            const std::vector<MmPair>&,
                                            const TrainConfig&);
template std::vector<double> MmTrain<double>(RnnLm<double>*,
                                             const std::vector<MmPair>&,
                                             const TrainConfig&);
template std::vector<double> MmFinetune<float>(RnnLm<float>*,
                                               const std::vector<MmPair>&, int,
                                               TrainConfig);
template std::vector<double> MmFinetune<double>(RnnLm<double>*,
                                                const std::vector<MmPair>&,
                                                int, TrainConfig);
template double MmPerplexity<float>(const RnnLm<float>&,
                                    const std::vector<MmPair>&);
template double MmPerplexity<double>(const RnnLm<double>&,
                                     const std::vector<MmPair>&);

}  // namespace cmdlm
