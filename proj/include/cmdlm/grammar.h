// grammar.h
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
// A small grammar DSL over finite command languages:
//
//   # movement commands
//   command = action [ "very" ] direction ;
//   action  = "turn" | "move" ;
//   direction = "left" | "right" ;
//
// One rule per `name = expr ;`.  Juxtaposition is sequencing, `|` is
// alternation, `(...)` groups, `[...]` marks an optional part, terminals
// are double-quoted lowercase words, and `#` starts a line comment.  The
// rule named `command` is the start symbol (a grammar with a single rule
// may omit the name).  Rule references must resolve and must not form a
// cycle, so every grammar denotes a finite language.

#ifndef CMDLM_GRAMMAR_H_
#define CMDLM_GRAMMAR_H_

#include <string>
#include <vector>

#include "cmdlm/automaton.h"

namespace cmdlm {

struct GrammarExpr {
  enum class Kind { kWord, kRuleRef, kSequence, kAlternation, kOptional };

  Kind kind = Kind::kWord;
  std::string text;                   // terminal word or referenced rule name
  std::vector<GrammarExpr> children;  // sequence/alternation parts, optional body
};

struct GrammarRule {
  std::string name;
  GrammarExpr body;
};

struct GrammarAst {
  std::vector<GrammarRule> rules;  // source order
  std::string start;

  const GrammarExpr* Find(const std::string& name) const;
};

// Parses and validates DSL source.  Errors carry line:column positions.
// Undefined references and recursive rules are rejected here.
GrammarAst ParseGrammar(const std::string& source);

// Compiles to an epsilon-free, deterministic, trimmed, acyclic acceptor
// with the same language.  Rejects grammars that derive the empty command.
Automaton CompileGrammar(const GrammarAst& ast);

}  // namespace cmdlm

#endif  // CMDLM_GRAMMAR_H_
