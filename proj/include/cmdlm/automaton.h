// automaton.h
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
// Acyclic word-labeled finite-state acceptors.  Compiled automata are
// epsilon-free, deterministic, trimmed and canonically numbered (BFS order
// from the start state, arcs sorted by label), so that equal languages
// built the same way serialize identically.

#ifndef CMDLM_AUTOMATON_H_
#define CMDLM_AUTOMATON_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cmdlm/nbest.h"
#include "cmdlm/types.h"

namespace cmdlm {

struct Arc {
  int32_t label = 0;  // index into Automaton::symbols
  int32_t target = 0;

  friend bool operator<(const Arc& a, const Arc& b) {
    return a.label != b.label ? a.label < b.label : a.target < b.target;
  }
  friend bool operator==(const Arc& a, const Arc& b) {
    return a.label == b.label && a.target == b.target;
  }
};

struct Automaton {
  std::vector<std::string> symbols;      // sorted, unique
  std::vector<std::vector<Arc>> arcs;    // per state, sorted
  std::vector<bool> accepting;
  int32_t start = 0;

  int32_t num_states() const { return static_cast<int32_t>(arcs.size()); }
  int64_t num_arcs() const {
    int64_t n = 0;
    for (const auto& a : arcs) n += static_cast<int64_t>(a.size());
    return n;
  }
};

// Index of a word in the symbol table, or -1.
int32_t FindSymbol(const Automaton& a, std::string_view word);

// True if no state has two outgoing arcs with the same label.
bool IsDeterministic(const Automaton& a);

// States in topological order from the start state.  Throws DataError if
// the graph has a cycle (infinite language).
std::vector<int32_t> TopologicalOrder(const Automaton& a);

// Subset construction.  Input must be epsilon-free.
Automaton Determinize(const Automaton& a);

// Removes states that are unreachable from the start or cannot reach an
// accept state.  An empty language yields a single non-accepting state.
Automaton Trim(const Automaton& a);

// Renumbers states in BFS order with arcs sorted by label.
Automaton Canonicalize(const Automaton& a);

// Number of accepted strings counted from the start state on the
// determinized automaton (so distinct paths are distinct strings).
// Throws DataError if the count exceeds the range of uint64_t.
uint64_t CountLanguage(const Automaton& a);

// All accepted strings in lexicographic order.  Throws DataError if the
// language holds more than `limit` strings.
std::vector<Command> EnumerateLanguage(const Automaton& a, uint64_t limit);

bool Accepts(const Automaton& a, const Command& c);

enum class SampleMode {
  kProductionUniform,  // uniform over outgoing alternatives at each state
  kLanguageUniform,    // every accepted string equiprobable
};

SampleMode ParseSampleMode(const std::string& name);

// Draws n commands i.i.d. from the automaton's language.  Deterministic
// given the seed.  Throws DataError on an empty language.
std::vector<Command> Sample(const Automaton& a, size_t n, uint64_t seed,
                            SampleMode mode);

// Flat acceptor over the distinct commands of a corpus: prefix tree, then
// trim.  Corpus must be nonempty.
Automaton BuildFsgFromCorpus(const std::vector<Command>& corpus);

// Grammar-filtered one-best: the highest-acoustic-score hypothesis the
// automaton accepts, falling back to the top acoustic hypothesis when none
// is accepted.  Throws DataError on an empty list.
Command FsgDecode(const Automaton& a, const NBestList& nbest);

// Line-oriented text form:
//   states N start S
//   T from word to
//   A state
std::string WriteAutomatonText(const Automaton& a);

// Parses the text form, validates state ids and acyclicity, then trims
// and canonicalizes.
Automaton ReadAutomatonText(const std::string& text);

Automaton ReadAutomatonFile(const std::string& path);
void WriteAutomatonFile(const std::string& path, const Automaton& a);

}  // namespace cmdlm

#endif  // CMDLM_AUTOMATON_H_
