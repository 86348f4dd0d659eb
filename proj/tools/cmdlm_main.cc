// cmdlm_main.cc
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
// Single entry point exposing every subsystem as a subcommand.

#include <cstdio>

#include "CLI11.hpp"
#include "cmdlm/types.h"

namespace cmdlm {
void RegisterAssocCli(CLI::App& app);
void RegisterCorpusCli(CLI::App& app);
void RegisterEvalCli(CLI::App& app);
void RegisterExpCli(CLI::App& app);
void RegisterGrammarCli(CLI::App& app);
void RegisterMmrnnCli(CLI::App& app);
void RegisterNgramCli(CLI::App& app);
void RegisterRescoreCli(CLI::App& app);
void RegisterRnnlmCli(CLI::App& app);
}

int main(int argc, char** argv) {
  CLI::App app{"command-grammar language modeling and rescoring toolkit"};
  app.require_subcommand(1);

  cmdlm::RegisterAssocCli(app);
  cmdlm::RegisterCorpusCli(app);
  cmdlm::RegisterEvalCli(app);
  cmdlm::RegisterExpCli(app);
  cmdlm::RegisterGrammarCli(app);
  cmdlm::RegisterMmrnnCli(app);
  cmdlm::RegisterNgramCli(app);
  cmdlm::RegisterRescoreCli(app);
  cmdlm::RegisterRnnlmCli(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const cmdlm::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const cmdlm::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
