// types.cc
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

#include "cmdlm/types.h"

#include <cctype>
#include <fstream>
#include <sstream>

namespace cmdlm {

std::vector<std::string> SplitWords(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) {
        words.push_back(current);
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

std::string JoinWords(const Command& command) {
  std::string out;
  for (size_t i = 0; i < command.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += command[i];
  }
  return out;
}

std::vector<Command> ReadCommandFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open command file: " + path);
  std::vector<Command> commands;
  std::string line;
  while (std::getline(in, line)) {
    Command c = SplitWords(line);
    if (!c.empty()) commands.push_back(std::move(c));
  }
  return commands;
}

void WriteCommandFile(const std::string& path,
                      const std::vector<Command>& commands) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write command file: " + path);
  for (const Command& c : commands) out << JoinWords(c) << "\n";
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << contents;
}

}  // namespace cmdlm
