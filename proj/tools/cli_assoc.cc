// cli_assoc.cc
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

#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "cmdlm/associate.h"

namespace cmdlm {

void RegisterAssocCli(CLI::App& app) {
  auto* assoc =
      app.add_subcommand("assoc", "keyword-driven command-image association");
  assoc->require_subcommand(1);

  {
    auto* cmd = assoc->add_subcommand(
        "build", "associate every command with an image id or NONE");
    auto commands_path = std::make_shared<std::string>();
    auto lexicon_path = std::make_shared<std::string>();
    auto index_path = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--commands", *commands_path, "one command per line")
        ->required();
    cmd->add_option("--lexicon", *lexicon_path,
                    "TSV keyword<TAB>class1,class2,...")
        ->required();
    cmd->add_option("--index", *index_path, "TSV class<TAB>image_id")
        ->required();
    cmd->add_option("--seed", *seed, "association seed");
    cmd->add_option("--out", *out, "output association table")->required();
    cmd->callback([=]() {
      const std::vector<Command> commands = ReadCommandFile(*commands_path);
      const KeywordLexicon lex = ReadKeywordLexicon(*lexicon_path);
      const ClassIndex idx = ReadClassIndex(*index_path);
      const AssociationTable table = Associate(commands, lex, idx, *seed);
      WriteAssociationTable(*out, table);
      size_t matched = 0;
      for (const AssociationRow& row : table.rows)
        if (row.matched()) ++matched;
      std::printf("coverage %.4f (%zu/%zu)\n", table.Coverage(), matched,
                  table.rows.size());
    });
  }
}

}  // namespace cmdlm
