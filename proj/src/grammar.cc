// grammar.cc
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

#include "cmdlm/grammar.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace cmdlm {

const GrammarExpr* GrammarAst::Find(const std::string& name) const {
  for (const GrammarRule& rule : rules) {
    if (rule.name == name) return &rule.body;
  }
  return nullptr;
}

namespace {

struct Token {
  enum class Kind { kIdent, kWord, kPunct, kEnd };
  Kind kind;
  std::string text;
  int line;
  int column;
};

[[noreturn]] void SyntaxError(int line, int column, const std::string& msg) {
  throw DataError("grammar syntax error at " + std::to_string(line) + ":" +
                  std::to_string(column) + ": " + msg);
}

class Lexer {
 public:
  explicit Lexer(const std::string& source) : source_(source) {}

  Token Next() {
    SkipSpaceAndComments();
    int line = line_, column = column_;
    if (pos_ >= source_.size()) return {Token::Kind::kEnd, "", line, column};
    char c = source_[pos_];
    if (c == '"') {
      Advance();
      std::string word;
      while (pos_ < source_.size() && source_[pos_] != '"') {
        if (source_[pos_] == '\n') {
          SyntaxError(line, column, "unterminated terminal");
        }
        word.push_back(source_[pos_]);
        Advance();
      }
      if (pos_ >= source_.size()) {
        SyntaxError(line, column, "unterminated terminal");
      }
      Advance();  // closing quote
      ValidateTerminal(word, line, column);
      return {Token::Kind::kWord, word, line, column};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string ident;
      while (pos_ < source_.size() &&
             (std::isalnum(static_cast<unsigned char>(source_[pos_])) ||
              source_[pos_] == '_' || source_[pos_] == '-')) {
        ident.push_back(source_[pos_]);
        Advance();
      }
      return {Token::Kind::kIdent, ident, line, column};
    }
    if (c == '=' || c == ';' || c == '|' || c == '(' || c == ')' ||
        c == '[' || c == ']') {
      Advance();
      return {Token::Kind::kPunct, std::string(1, c), line, column};
    }
    SyntaxError(line, column, std::string("unexpected character '") + c + "'");
  }

 private:
  void Advance() {
    if (source_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void SkipSpaceAndComments() {
    while (pos_ < source_.size()) {
      char c = source_[pos_];
      if (c == '#') {
        while (pos_ < source_.size() && source_[pos_] != '\n') Advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        Advance();
      } else {
        break;
      }
    }
  }

  static void ValidateTerminal(const std::string& word, int line, int column) {
    if (word.empty()) SyntaxError(line, column, "empty terminal");
    for (char c : word) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        SyntaxError(line, column,
                    "terminal \"" + word + "\" contains whitespace");
      }
      if (std::isupper(static_cast<unsigned char>(c))) {
        SyntaxError(line, column,
                    "terminal \"" + word + "\" must be lowercase");
      }
    }
  }

  const std::string& source_;
  size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  explicit Parser(const std::string& source) : lexer_(source) {
    current_ = lexer_.Next();
  }

  GrammarAst Parse() {
    GrammarAst ast;
    while (current_.kind != Token::Kind::kEnd) {
      ast.rules.push_back(ParseRule());
    }
    if (ast.rules.empty()) {
      throw DataError("grammar has no rules");
    }
    return ast;
  }

 private:
  GrammarRule ParseRule() {
    if (current_.kind != Token::Kind::kIdent) {
      SyntaxError(current_.line, current_.column, "expected rule name");
    }
    GrammarRule rule;
    rule.name = current_.text;
    Consume();
    Expect("=");
    rule.body = ParseAlternation();
    Expect(";");
    return rule;
  }

  GrammarExpr ParseAlternation() {
    GrammarExpr first = ParseSequence();
    if (!IsPunct("|")) return first;
    GrammarExpr alt;
    alt.kind = GrammarExpr::Kind::kAlternation;
    alt.children.push_back(std::move(first));
    while (IsPunct("|")) {
      Consume();
      alt.children.push_back(ParseSequence());
    }
    return alt;
  }

  GrammarExpr ParseSequence() {
    std::vector<GrammarExpr> parts;
    while (IsFactorStart()) parts.push_back(ParseFactor());
    if (parts.empty()) {
      SyntaxError(current_.line, current_.column,
                  "expected a terminal, rule name, group or option");
    }
    if (parts.size() == 1) return std::move(parts[0]);
    GrammarExpr seq;
    seq.kind = GrammarExpr::Kind::kSequence;
    seq.children = std::move(parts);
    return seq;
  }

  bool IsFactorStart() const {
    return current_.kind == Token::Kind::kWord ||
           current_.kind == Token::Kind::kIdent || IsPunct("(") || IsPunct("[");
  }

  GrammarExpr ParseFactor() {
    GrammarExpr expr;
    if (current_.kind == Token::Kind::kWord) {
      expr.kind = GrammarExpr::Kind::kWord;
      expr.text = current_.text;
      Consume();
      return expr;
    }
    if (current_.kind == Token::Kind::kIdent) {
      expr.kind = GrammarExpr::Kind::kRuleRef;
      expr.text = current_.text;
      Consume();
      return expr;
    }
    if (IsPunct("(")) {
      Consume();
      expr = ParseAlternation();
      Expect(")");
      return expr;
    }
    Consume();  // "["
    expr.kind = GrammarExpr::Kind::kOptional;
    expr.children.push_back(ParseAlternation());
    Expect("]");
    return expr;
  }

  bool IsPunct(const char* p) const {
    return current_.kind == Token::Kind::kPunct && current_.text == p;
  }

  void Expect(const char* p) {
    if (!IsPunct(p)) {
      SyntaxError(current_.line, current_.column,
                  std::string("expected '") + p + "'");
    }
    Consume();
  }

  void Consume() { current_ = lexer_.Next(); }

  Lexer lexer_;
  Token current_;
};

void CollectRefs(const GrammarExpr& expr, std::vector<std::string>& refs) {
  if (expr.kind == GrammarExpr::Kind::kRuleRef) refs.push_back(expr.text);
  for (const GrammarExpr& child : expr.children) CollectRefs(child, refs);
}

// DFS cycle check over the rule-reference graph.
void CheckAcyclic(const GrammarAst& ast) {
  std::map<std::string, std::vector<std::string>> graph;
  for (const GrammarRule& rule : ast.rules) {
    std::vector<std::string> refs;
    CollectRefs(rule.body, refs);
    graph[rule.name] = std::move(refs);
  }
  enum class Color { kWhite, kGray, kBlack };
  std::map<std::string, Color> color;
  std::vector<std::pair<std::string, size_t>> stack;
  for (const GrammarRule& rule : ast.rules) {
    if (color[rule.name] != Color::kWhite) continue;
    stack.emplace_back(rule.name, 0);
    color[rule.name] = Color::kGray;
    while (!stack.empty()) {
      auto& [name, i] = stack.back();
      auto& refs = graph[name];
      if (i >= refs.size()) {
        color[name] = Color::kBlack;
        stack.pop_back();
        continue;
      }
      const std::string& ref = refs[i++];
      if (color[ref] == Color::kGray) {
        throw DataError("recursive rule '" + ref +
                        "': the grammar would generate an infinite language");
      }
      if (color[ref] == Color::kWhite) {
        color[ref] = Color::kGray;
        stack.emplace_back(ref, 0);
      }
    }
  }
}

}  // namespace

GrammarAst ParseGrammar(const std::string& source) {
  GrammarAst ast = Parser(source).Parse();

  std::set<std::string> names;
  for (const GrammarRule& rule : ast.rules) {
    if (!names.insert(rule.name).second) {
      throw DataError("duplicate rule '" + rule.name + "'");
    }
  }
  for (const GrammarRule& rule : ast.rules) {
    std::vector<std::string> refs;
    CollectRefs(rule.body, refs);
    for (const std::string& ref : refs) {
      if (!names.count(ref)) {
        throw DataError("undefined rule '" + ref + "' referenced from '" +
                        rule.name + "'");
      }
    }
  }
  CheckAcyclic(ast);

  if (names.count("command")) {
    ast.start = "command";
  } else if (ast.rules.size() == 1) {
    ast.start = ast.rules.front().name;
  } else {
    throw DataError("no rule named 'command' to use as the start symbol");
  }
  return ast;
}

namespace {

// Thompson-style construction with epsilon arcs (label -1).
struct NfaBuilder {
  struct NfaArc {
    int32_t label;  // -1 for epsilon
    int32_t to;
  };

  const GrammarAst& ast;
  std::vector<std::string> symbols;
  std::vector<std::vector<NfaArc>> arcs;

  explicit NfaBuilder(const GrammarAst& grammar_ast) : ast(grammar_ast) {
    std::set<std::string> words;
    CollectWords(words);
    symbols.assign(words.begin(), words.end());
  }

  void CollectWords(std::set<std::string>& words) const {
    for (const GrammarRule& rule : ast.rules) CollectWordsIn(rule.body, words);
  }

  static void CollectWordsIn(const GrammarExpr& expr,
                             std::set<std::string>& words) {
    if (expr.kind == GrammarExpr::Kind::kWord) words.insert(expr.text);
    for (const GrammarExpr& child : expr.children) CollectWordsIn(child, words);
  }

  int32_t NewState() {
    arcs.emplace_back();
    return static_cast<int32_t>(arcs.size() - 1);
  }

  int32_t SymbolId(const std::string& word) const {
    auto it = std::lower_bound(symbols.begin(), symbols.end(), word);
    return static_cast<int32_t>(it - symbols.begin());
  }

  // Wires expr between the given entry and exit states.
  void Build(const GrammarExpr& expr, int32_t entry, int32_t exit) {
    switch (expr.kind) {
      case GrammarExpr::Kind::kWord:
        arcs[entry].push_back({SymbolId(expr.text), exit});
        break;
      case GrammarExpr::Kind::kRuleRef:
        Build(*ast.Find(expr.text), entry, exit);
        break;
      case GrammarExpr::Kind::kSequence: {
        int32_t from = entry;
        for (size_t i = 0; i < expr.children.size(); ++i) {
          int32_t to = (i + 1 == expr.children.size()) ? exit : NewState();
          Build(expr.children[i], from, to);
          from = to;
        }
        break;
      }
      case GrammarExpr::Kind::kAlternation:
        for (const GrammarExpr& child : expr.children) Build(child, entry, exit);
        break;
      case GrammarExpr::Kind::kOptional:
        arcs[entry].push_back({-1, exit});
        Build(expr.children.front(), entry, exit);
        break;
    }
  }
};

}  // namespace

Automaton CompileGrammar(const GrammarAst& ast) {
  NfaBuilder nfa(ast);
  int32_t entry = nfa.NewState();
  int32_t exit = nfa.NewState();
  nfa.Build(*ast.Find(ast.start), entry, exit);

  // Epsilon closures, then an epsilon-free acceptor.
  const int32_t n = static_cast<int32_t>(nfa.arcs.size());
  std::vector<std::vector<int32_t>> closures(n);
  for (int32_t s = 0; s < n; ++s) {
    std::vector<int32_t>& closure = closures[s];
    std::vector<int32_t> stack{s};
    std::vector<bool> seen(n, false);
    seen[s] = true;
    while (!stack.empty()) {
      int32_t t = stack.back();
      stack.pop_back();
      closure.push_back(t);
      for (const auto& arc : nfa.arcs[t]) {
        if (arc.label < 0 && !seen[arc.to]) {
          seen[arc.to] = true;
          stack.push_back(arc.to);
        }
      }
    }
  }

  Automaton a;
  a.symbols = nfa.symbols;
  a.arcs.assign(n, {});
  a.accepting.assign(n, false);
  a.start = entry;
  for (int32_t s = 0; s < n; ++s) {
    for (int32_t t : closures[s]) {
      if (t == exit) a.accepting[s] = true;
      for (const auto& arc : nfa.arcs[t]) {
        if (arc.label >= 0) a.arcs[s].push_back(Arc{arc.label, arc.to});
      }
    }
    std::sort(a.arcs[s].begin(), a.arcs[s].end());
    a.arcs[s].erase(std::unique(a.arcs[s].begin(), a.arcs[s].end()),
                    a.arcs[s].end());
  }

  Automaton compiled = Canonicalize(Trim(Determinize(a)));
  if (compiled.accepting[compiled.start]) {
    throw DataError("the grammar derives the empty command");
  }
  return compiled;
}

}  // namespace cmdlm
