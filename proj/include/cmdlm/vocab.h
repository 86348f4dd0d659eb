// vocab.h
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

#ifndef CMDLM_VOCAB_H_
#define CMDLM_VOCAB_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cmdlm/types.h"

namespace cmdlm {

// Word <-> dense id mapping with fixed reserved ids.  Ids are capped at
// 65,534 so that four of them pack into a 64-bit n-gram key.
class Vocab {
 public:
  static constexpr int32_t kUnk = 0;
  static constexpr int32_t kBos = 1;
  static constexpr int32_t kEos = 2;
  static constexpr const char* kUnkWord = "<unk>";
  static constexpr const char* kBosWord = "<s>";
  static constexpr const char* kEosWord = "</s>";
  static constexpr size_t kMaxSize = 65534;

  Vocab();

  // Keeps the cap most frequent corpus words (reserved tokens included in
  // the cap), ties broken alphabetically.
  static Vocab Build(const std::vector<Command>& corpus, size_t cap);

  // Words in id order; reserved tokens are added if missing.
  static Vocab FromWords(const std::vector<std::string>& words);

  static Vocab LoadFile(const std::string& path);
  void SaveFile(const std::string& path) const;

  // OOV maps to kUnk.
  int32_t Id(const std::string& word) const;
  const std::string& Word(int32_t id) const;
  bool Contains(const std::string& word) const { return map_.count(word) > 0; }
  int32_t size() const { return static_cast<int32_t>(words_.size()); }

  std::vector<int32_t> Ids(const Command& c) const;

  // Every word a model may predict: the whole vocabulary minus the
  // sentence-start token.
  std::vector<std::string> PredictableWords() const;
  int32_t predictable_size() const { return size() - 1; }

  bool operator==(const Vocab& other) const { return words_ == other.words_; }

 private:
  void Add(const std::string& word);

  std::vector<std::string> words_;
  std::map<std::string, int32_t> map_;
};

}  // namespace cmdlm

#endif  // CMDLM_VOCAB_H_
