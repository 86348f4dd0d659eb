// vocab.cc
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

#include "cmdlm/vocab.h"

#include <algorithm>
#include <sstream>

namespace cmdlm {

Vocab::Vocab() {
  Add(kUnkWord);
  Add(kBosWord);
  Add(kEosWord);
}

void Vocab::Add(const std::string& word) {
  if (map_.count(word)) return;
  if (words_.size() >= kMaxSize) {
    throw DataError("vocabulary exceeds the 65,534-word limit");
  }
  map_[word] = static_cast<int32_t>(words_.size());
  words_.push_back(word);
}

Vocab Vocab::Build(const std::vector<Command>& corpus, size_t cap) {
  if (cap < 4) throw DataError("vocabulary cap must be at least 4");
  if (cap > kMaxSize) cap = kMaxSize;
  std::map<std::string, uint64_t> freq;
  for (const Command& c : corpus) {
    for (const std::string& w : c) ++freq[w];
  }
  freq.erase(kUnkWord);
  freq.erase(kBosWord);
  freq.erase(kEosWord);

  std::vector<std::pair<std::string, uint64_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });

  Vocab v;
  for (const auto& [word, count] : ranked) {
    if (v.words_.size() >= cap) break;
    v.Add(word);
  }
  return v;
}

Vocab Vocab::FromWords(const std::vector<std::string>& words) {
  Vocab v;
  for (const std::string& w : words) v.Add(w);
  return v;
}

Vocab Vocab::LoadFile(const std::string& path) {
  std::vector<std::string> words;
  std::istringstream in(ReadTextFile(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return FromWords(words);
}

void Vocab::SaveFile(const std::string& path) const {
  std::string out;
  for (const std::string& w : words_) {
    out += w;
    out += '\n';
  }
  WriteTextFile(path, out);
}

int32_t Vocab::Id(const std::string& word) const {
  auto it = map_.find(word);
  return it == map_.end() ? kUnk : it->second;
}

const std::string& Vocab::Word(int32_t id) const {
  if (id < 0 || id >= size()) throw DataError("word id out of range");
  return words_[static_cast<size_t>(id)];
}

std::vector<int32_t> Vocab::Ids(const Command& c) const {
  std::vector<int32_t> ids;
  ids.reserve(c.size());
  for (const std::string& w : c) ids.push_back(Id(w));
  return ids;
}

std::vector<std::string> Vocab::PredictableWords() const {
  std::vector<std::string> out;
  out.reserve(words_.size() - 1);
  for (int32_t i = 0; i < size(); ++i) {
    if (i != kBos) out.push_back(words_[static_cast<size_t>(i)]);
  }
  return out;
}

}  // namespace cmdlm
