// automaton.cc
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

#include "cmdlm/automaton.h"

#include <algorithm>
#include <deque>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "cmdlm/rng.h"

namespace cmdlm {

int32_t FindSymbol(const Automaton& a, std::string_view word) {
  auto it = std::lower_bound(a.symbols.begin(), a.symbols.end(), word);
  if (it == a.symbols.end() || *it != word) return -1;
  return static_cast<int32_t>(it - a.symbols.begin());
}

bool IsDeterministic(const Automaton& a) {
  for (const auto& state_arcs : a.arcs) {
    for (size_t i = 1; i < state_arcs.size(); ++i) {
      if (state_arcs[i].label == state_arcs[i - 1].label) return false;
    }
  }
  return true;
}

std::vector<int32_t> TopologicalOrder(const Automaton& a) {
  const int32_t n = a.num_states();
  std::vector<int32_t> indegree(n, 0);
  for (const auto& state_arcs : a.arcs) {
    for (const Arc& arc : state_arcs) ++indegree[arc.target];
  }
  std::vector<int32_t> order;
  order.reserve(n);
  std::deque<int32_t> ready;
  for (int32_t s = 0; s < n; ++s) {
    if (indegree[s] == 0) ready.push_back(s);
  }
  while (!ready.empty()) {
    int32_t s = ready.front();
    ready.pop_front();
    order.push_back(s);
    for (const Arc& arc : a.arcs[s]) {
      if (--indegree[arc.target] == 0) ready.push_back(arc.target);
    }
  }
  if (static_cast<int32_t>(order.size()) != n) {
    throw DataError("automaton has a cycle; only finite languages are supported");
  }
  return order;
}

Automaton Determinize(const Automaton& a) {
  Automaton out;
  out.symbols = a.symbols;
  std::map<std::vector<int32_t>, int32_t> subset_id;
  std::vector<std::vector<int32_t>> subsets;

  auto intern = [&](std::vector<int32_t> subset) -> int32_t {
    auto [it, inserted] =
        subset_id.emplace(subset, static_cast<int32_t>(subsets.size()));
    if (inserted) {
      subsets.push_back(std::move(subset));
      out.arcs.emplace_back();
      out.accepting.push_back(false);
    }
    return it->second;
  };

  out.start = intern({a.start});
  for (int32_t q = 0; q < static_cast<int32_t>(subsets.size()); ++q) {
    const std::vector<int32_t> subset = subsets[q];
    bool acc = false;
    std::map<int32_t, std::vector<int32_t>> by_label;
    for (int32_t s : subset) {
      if (a.accepting[s]) acc = true;
      for (const Arc& arc : a.arcs[s]) by_label[arc.label].push_back(arc.target);
    }
    out.accepting[q] = acc;
    for (auto& [label, targets] : by_label) {
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
      int32_t t = intern(std::move(targets));
      out.arcs[q].push_back(Arc{label, t});
    }
    std::sort(out.arcs[q].begin(), out.arcs[q].end());
  }
  return out;
}

Automaton Trim(const Automaton& a) {
  const int32_t n = a.num_states();
  std::vector<bool> reachable(n, false);
  std::deque<int32_t> queue{a.start};
  reachable[a.start] = true;
  while (!queue.empty()) {
    int32_t s = queue.front();
    queue.pop_front();
    for (const Arc& arc : a.arcs[s]) {
      if (!reachable[arc.target]) {
        reachable[arc.target] = true;
        queue.push_back(arc.target);
      }
    }
  }
  std::vector<std::vector<int32_t>> reverse_adj(n);
  for (int32_t s = 0; s < n; ++s) {
    for (const Arc& arc : a.arcs[s]) reverse_adj[arc.target].push_back(s);
  }
  std::vector<bool> coaccessible(n, false);
  for (int32_t s = 0; s < n; ++s) {
    if (a.accepting[s] && !coaccessible[s]) {
      coaccessible[s] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    int32_t s = queue.front();
    queue.pop_front();
    for (int32_t p : reverse_adj[s]) {
      if (!coaccessible[p]) {
        coaccessible[p] = true;
        queue.push_back(p);
      }
    }
  }

  std::vector<int32_t> remap(n, -1);
  int32_t kept = 0;
  for (int32_t s = 0; s < n; ++s) {
    if (reachable[s] && coaccessible[s]) remap[s] = kept++;
  }
  Automaton out;
  out.symbols = a.symbols;
  if (remap[a.start] < 0) {
    // Empty language.
    out.arcs.assign(1, {});
    out.accepting.assign(1, false);
    out.start = 0;
    return out;
  }
  out.arcs.assign(kept, {});
  out.accepting.assign(kept, false);
  out.start = remap[a.start];
  for (int32_t s = 0; s < n; ++s) {
    if (remap[s] < 0) continue;
    out.accepting[remap[s]] = a.accepting[s];
    for (const Arc& arc : a.arcs[s]) {
      if (remap[arc.target] >= 0) {
        out.arcs[remap[s]].push_back(Arc{arc.label, remap[arc.target]});
      }
    }
    std::sort(out.arcs[remap[s]].begin(), out.arcs[remap[s]].end());
  }
  return out;
}

Automaton Canonicalize(const Automaton& a) {
  const int32_t n = a.num_states();
  std::vector<bool> label_used(a.symbols.size(), false);
  for (const auto& state_arcs : a.arcs) {
    for (const Arc& arc : state_arcs) label_used[arc.label] = true;
  }
  std::vector<int32_t> label_remap(a.symbols.size(), -1);
  std::vector<std::string> symbols;
  for (size_t l = 0; l < a.symbols.size(); ++l) {
    if (label_used[l]) {
      label_remap[l] = static_cast<int32_t>(symbols.size());
      symbols.push_back(a.symbols[l]);
    }
  }

  std::vector<int32_t> state_remap(n, -1);
  std::vector<int32_t> bfs_order;
  std::deque<int32_t> queue{a.start};
  state_remap[a.start] = 0;
  bfs_order.push_back(a.start);
  while (!queue.empty()) {
    int32_t s = queue.front();
    queue.pop_front();
    std::vector<Arc> sorted_arcs = a.arcs[s];
    std::sort(sorted_arcs.begin(), sorted_arcs.end());
    for (const Arc& arc : sorted_arcs) {
      if (state_remap[arc.target] < 0) {
        state_remap[arc.target] = static_cast<int32_t>(bfs_order.size());
        bfs_order.push_back(arc.target);
        queue.push_back(arc.target);
      }
    }
  }

  Automaton out;
  out.symbols = std::move(symbols);
  out.arcs.assign(bfs_order.size(), {});
  out.accepting.assign(bfs_order.size(), false);
  out.start = 0;
  for (int32_t old_s : bfs_order) {
    int32_t s = state_remap[old_s];
    out.accepting[s] = a.accepting[old_s];
    for (const Arc& arc : a.arcs[old_s]) {
      out.arcs[s].push_back(Arc{label_remap[arc.label], state_remap[arc.target]});
    }
    std::sort(out.arcs[s].begin(), out.arcs[s].end());
  }
  return out;
}

namespace {

Automaton EnsureDfa(const Automaton& a) {
  if (IsDeterministic(a)) return a;
  return Canonicalize(Trim(Determinize(a)));
}

// Accepted-string counts per state, computed in reverse topological order.
// Throws DataError if any state's count exceeds uint64_t.
std::vector<uint64_t> PathCounts(const Automaton& dfa) {
  std::vector<int32_t> order = TopologicalOrder(dfa);
  std::vector<uint64_t> paths(dfa.num_states(), 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int32_t s = *it;
    unsigned __int128 total = dfa.accepting[s] ? 1 : 0;
    for (const Arc& arc : dfa.arcs[s]) total += paths[arc.target];
    if (total > static_cast<unsigned __int128>(UINT64_MAX)) {
      throw DataError("language size exceeds 2^64-1");
    }
    paths[s] = static_cast<uint64_t>(total);
  }
  return paths;
}

}  // namespace

uint64_t CountLanguage(const Automaton& a) {
  Automaton dfa = EnsureDfa(a);
  return PathCounts(dfa)[dfa.start];
}

std::vector<Command> EnumerateLanguage(const Automaton& a, uint64_t limit) {
  Automaton dfa = EnsureDfa(a);
  TopologicalOrder(dfa);  // acyclicity check
  std::vector<Command> out;
  // Explicit DFS stack of (state, next arc index); prefix holds the labels
  // taken so far.  Arcs are label-sorted, so output is lexicographic.
  std::vector<std::pair<int32_t, size_t>> stack{{dfa.start, 0}};
  Command prefix;
  if (dfa.accepting[dfa.start]) out.push_back(prefix);
  while (!stack.empty()) {
    auto& [state, arc_index] = stack.back();
    if (arc_index >= dfa.arcs[state].size()) {
      stack.pop_back();
      if (!prefix.empty()) prefix.pop_back();
      continue;
    }
    const Arc& arc = dfa.arcs[state][arc_index++];
    prefix.push_back(dfa.symbols[arc.label]);
    if (dfa.accepting[arc.target]) {
      if (out.size() >= limit) {
        throw DataError("language larger than enumeration limit " +
                        std::to_string(limit));
      }
      out.push_back(prefix);
    }
    stack.emplace_back(arc.target, 0);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Accepts(const Automaton& a, const Command& c) {
  std::vector<int32_t> current{a.start};
  for (const std::string& word : c) {
    int32_t label = FindSymbol(a, word);
    if (label < 0) return false;
    std::vector<int32_t> next;
    for (int32_t s : current) {
      const auto& state_arcs = a.arcs[s];
      auto lo = std::lower_bound(state_arcs.begin(), state_arcs.end(),
                                 Arc{label, 0});
      for (auto it = lo; it != state_arcs.end() && it->label == label; ++it) {
        next.push_back(it->target);
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    if (next.empty()) return false;
    current = std::move(next);
  }
  for (int32_t s : current) {
    if (a.accepting[s]) return true;
  }
  return false;
}

SampleMode ParseSampleMode(const std::string& name) {
  if (name == "production-uniform") return SampleMode::kProductionUniform;
  if (name == "language-uniform") return SampleMode::kLanguageUniform;
  throw DataError("unknown sample mode: " + name +
                  " (expected production-uniform or language-uniform)");
}

std::vector<Command> Sample(const Automaton& a, size_t n, uint64_t seed,
                            SampleMode mode) {
  Automaton dfa = EnsureDfa(a);
  std::vector<uint64_t> paths = PathCounts(dfa);
  if (paths[dfa.start] == 0) throw DataError("cannot sample: empty language");

  Rng rng(seed);
  std::vector<Command> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    Command c;
    int32_t s = dfa.start;
    for (;;) {
      const auto& state_arcs = dfa.arcs[s];
      if (mode == SampleMode::kProductionUniform) {
        uint64_t alternatives =
            state_arcs.size() + (dfa.accepting[s] ? 1 : 0);
        uint64_t pick = rng.Below(alternatives);
        if (pick >= state_arcs.size()) break;  // the stop alternative
        c.push_back(dfa.symbols[state_arcs[pick].label]);
        s = state_arcs[pick].target;
      } else {
        uint64_t r = rng.Below(paths[s]);
        if (dfa.accepting[s]) {
          if (r == 0) break;
          --r;
        }
        bool advanced = false;
        for (const Arc& arc : state_arcs) {
          if (r < paths[arc.target]) {
            c.push_back(dfa.symbols[arc.label]);
            s = arc.target;
            advanced = true;
            break;
          }
          r -= paths[arc.target];
        }
        if (!advanced) break;  // unreachable on a trimmed automaton
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

Automaton BuildFsgFromCorpus(const std::vector<Command>& corpus) {
  if (corpus.empty()) throw DataError("cannot build FSG from an empty corpus");
  std::set<std::string> words;
  for (const Command& c : corpus) {
    if (c.empty()) throw DataError("cannot build FSG: corpus contains an empty command");
    words.insert(c.begin(), c.end());
  }
  Automaton out;
  out.symbols.assign(words.begin(), words.end());
  out.arcs.assign(1, {});
  out.accepting.assign(1, false);
  out.start = 0;
  for (const Command& c : corpus) {
    int32_t s = 0;
    for (const std::string& word : c) {
      int32_t label = FindSymbol(out, word);
      auto& state_arcs = out.arcs[s];
      auto it = std::lower_bound(state_arcs.begin(), state_arcs.end(),
                                 Arc{label, 0});
      if (it != state_arcs.end() && it->label == label) {
        s = it->target;
      } else {
        int32_t t = out.num_states();
        out.arcs.emplace_back();
        out.accepting.push_back(false);
        // emplace_back may invalidate state_arcs
        auto& from_arcs = out.arcs[s];
        from_arcs.insert(std::lower_bound(from_arcs.begin(), from_arcs.end(),
                                          Arc{label, 0}),
                         Arc{label, t});
        s = t;
      }
    }
    out.accepting[s] = true;
  }
  return Canonicalize(out);
}

Command FsgDecode(const Automaton& a, const NBestList& nbest) {
  if (nbest.hyps.empty()) throw DataError("fsg decode: empty n-best list");
  const Hypothesis* best_accepted = nullptr;
  const Hypothesis* best_overall = nullptr;
  for (const Hypothesis& h : nbest.hyps) {
    if (!best_overall || h.acoustic_logscore > best_overall->acoustic_logscore) {
      best_overall = &h;
    }
    if (Accepts(a, h.text) &&
        (!best_accepted ||
         h.acoustic_logscore > best_accepted->acoustic_logscore)) {
      best_accepted = &h;
    }
  }
  return best_accepted ? best_accepted->text : best_overall->text;
}

std::string WriteAutomatonText(const Automaton& a) {
  std::ostringstream out;
  out << "states " << a.num_states() << " start " << a.start << "\n";
  for (int32_t s = 0; s < a.num_states(); ++s) {
    for (const Arc& arc : a.arcs[s]) {
      out << "T " << s << " " << a.symbols[arc.label] << " " << arc.target
          << "\n";
    }
  }
  for (int32_t s = 0; s < a.num_states(); ++s) {
    if (a.accepting[s]) out << "A " << s << "\n";
  }
  return out.str();
}

Automaton ReadAutomatonText(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  int64_t num_states = -1;
  int64_t start = -1;
  struct RawArc {
    int64_t from;
    std::string word;
    int64_t to;
  };
  std::vector<RawArc> raw_arcs;
  std::vector<int64_t> raw_accepts;

  auto fail = [&](const std::string& msg) {
    throw DataError("automaton line " + std::to_string(line_number) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_number;
    std::vector<std::string> tokens = SplitWords(line);
    if (tokens.empty()) continue;
    if (num_states < 0) {
      if (tokens.size() != 4 || tokens[0] != "states" || tokens[2] != "start") {
        fail("expected header 'states N start S'");
      }
      try {
        num_states = std::stoll(tokens[1]);
        start = std::stoll(tokens[3]);
      } catch (const std::exception&) {
        fail("invalid number in header");
      }
      if (num_states < 1) fail("state count must be at least 1");
      if (start < 0 || start >= num_states) fail("start state out of range");
    } else if (tokens[0] == "T") {
      if (tokens.size() != 4) fail("expected 'T from word to'");
      RawArc arc;
      try {
        arc.from = std::stoll(tokens[1]);
        arc.to = std::stoll(tokens[3]);
      } catch (const std::exception&) {
        fail("invalid state id on transition line");
      }
      arc.word = tokens[2];
      if (arc.from < 0 || arc.from >= num_states || arc.to < 0 ||
          arc.to >= num_states) {
        fail("transition state id out of range");
      }
      raw_arcs.push_back(std::move(arc));
    } else if (tokens[0] == "A") {
      if (tokens.size() != 2) fail("expected 'A state'");
      int64_t s = -1;
      try {
        s = std::stoll(tokens[1]);
      } catch (const std::exception&) {
        fail("invalid state id on accept line");
      }
      if (s < 0 || s >= num_states) fail("accept state id out of range");
      raw_accepts.push_back(s);
    } else {
      fail("unknown line type '" + tokens[0] + "'");
    }
  }
  if (num_states < 0) throw DataError("automaton file is empty");

  std::set<std::string> words;
  for (const RawArc& arc : raw_arcs) words.insert(arc.word);
  Automaton a;
  a.symbols.assign(words.begin(), words.end());
  a.arcs.assign(num_states, {});
  a.accepting.assign(num_states, false);
  a.start = static_cast<int32_t>(start);
  for (const RawArc& arc : raw_arcs) {
    a.arcs[arc.from].push_back(Arc{FindSymbol(a, arc.word),
                                   static_cast<int32_t>(arc.to)});
  }
  for (auto& state_arcs : a.arcs) {
    std::sort(state_arcs.begin(), state_arcs.end());
    state_arcs.erase(std::unique(state_arcs.begin(), state_arcs.end()),
                     state_arcs.end());
  }
  for (int64_t s : raw_accepts) a.accepting[s] = true;
  TopologicalOrder(a);  // rejects cyclic inputs
  return Canonicalize(Trim(a));
}

Automaton ReadAutomatonFile(const std::string& path) {
  return ReadAutomatonText(ReadTextFile(path));
}

void WriteAutomatonFile(const std::string& path, const Automaton& a) {
  WriteTextFile(path, WriteAutomatonText(a));
}

}  // namespace cmdlm
