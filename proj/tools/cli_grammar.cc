// cli_grammar.cc
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

#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "cmdlm/grammar.h"

namespace cmdlm {

namespace {

// Loads an acceptor from either a DSL source (--dsl) or a serialized
// automaton (--automaton), or from a corpus of commands (--corpus).
struct AutomatonSource {
  std::string dsl_path;
  std::string automaton_path;
  std::string corpus_path;

  void AddOptions(CLI::App* cmd, bool with_corpus) {
    auto* dsl = cmd->add_option("--dsl", dsl_path, "grammar DSL file");
    auto* fsa =
        cmd->add_option("--automaton", automaton_path, "serialized automaton");
    dsl->excludes(fsa);
    if (with_corpus) {
      auto* corpus = cmd->add_option("--corpus", corpus_path,
                                     "command corpus, one command per line");
      corpus->excludes(dsl);
      corpus->excludes(fsa);
    }
  }

  Automaton Load() const {
    if (!dsl_path.empty()) {
      return CompileGrammar(ParseGrammar(ReadTextFile(dsl_path)));
    }
    if (!automaton_path.empty()) return ReadAutomatonFile(automaton_path);
    if (!corpus_path.empty()) {
      return BuildFsgFromCorpus(ReadCommandFile(corpus_path));
    }
    throw CLI::ValidationError("one of --dsl/--automaton/--corpus is required");
  }
};

}  // namespace

void RegisterGrammarCli(CLI::App& app) {
  auto* grammar = app.add_subcommand("grammar", "finite command grammars");
  grammar->require_subcommand(1);

  {
    auto* cmd = grammar->add_subcommand("parse", "validate a grammar file");
    auto path = std::make_shared<std::string>();
    cmd->add_option("--dsl", *path, "grammar DSL file")->required();
    cmd->callback([path]() {
      GrammarAst ast = ParseGrammar(ReadTextFile(*path));
      std::cout << "rules " << ast.rules.size() << " start " << ast.start
                << "\n";
    });
  }

  {
    auto* cmd = grammar->add_subcommand(
        "compile", "compile a grammar or corpus to an acceptor");
    auto src = std::make_shared<AutomatonSource>();
    auto out = std::make_shared<std::string>();
    src->AddOptions(cmd, /*with_corpus=*/true);
    cmd->add_option("--out", *out, "output automaton path")->required();
    cmd->callback([src, out]() {
      Automaton a = src->Load();
      WriteAutomatonFile(*out, a);
      std::cout << "states " << a.num_states() << " arcs " << a.num_arcs()
                << "\n";
    });
  }

  {
    auto* cmd = grammar->add_subcommand("count", "count the language");
    auto src = std::make_shared<AutomatonSource>();
    src->AddOptions(cmd, /*with_corpus=*/true);
    cmd->callback([src]() { std::cout << CountLanguage(src->Load()) << "\n"; });
  }

  {
    auto* cmd = grammar->add_subcommand("sample", "sample commands");
    auto src = std::make_shared<AutomatonSource>();
    auto n = std::make_shared<uint64_t>(1);
    auto seed = std::make_shared<uint64_t>(0);
    auto mode = std::make_shared<std::string>("production-uniform");
    auto out = std::make_shared<std::string>();
    src->AddOptions(cmd, /*with_corpus=*/true);
    cmd->add_option("--n", *n, "number of commands");
    cmd->add_option("--seed", *seed, "random seed");
    cmd->add_option("--mode", *mode,
                    "production-uniform or language-uniform");
    cmd->add_option("--out", *out, "output file (default stdout)");
    cmd->callback([src, n, seed, mode, out]() {
      std::vector<Command> commands =
          Sample(src->Load(), *n, *seed, ParseSampleMode(*mode));
      if (out->empty()) {
        for (const Command& c : commands) std::cout << JoinWords(c) << "\n";
      } else {
        WriteCommandFile(*out, commands);
      }
    });
  }

  {
    auto* cmd = grammar->add_subcommand(
        "accept", "test membership for each command in a file");
    auto src = std::make_shared<AutomatonSource>();
    auto commands_path = std::make_shared<std::string>();
    src->AddOptions(cmd, /*with_corpus=*/true);
    cmd->add_option("--commands", *commands_path,
                    "commands to test, one per line")
        ->required();
    cmd->callback([src, commands_path]() {
      Automaton a = src->Load();
      for (const Command& c : ReadCommandFile(*commands_path)) {
        std::cout << (Accepts(a, c) ? "yes" : "no") << "\t" << JoinWords(c)
                  << "\n";
      }
    });
  }
}

}  // namespace cmdlm
