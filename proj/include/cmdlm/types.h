// types.h
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
// Common value types and error categories shared across the toolkit.

#ifndef CMDLM_TYPES_H_
#define CMDLM_TYPES_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmdlm {

// A command is an ordered, whitespace-free word sequence.
using Command = std::vector<std::string>;

// Malformed or inconsistent input data (bad grammar, bad file, bad config).
// CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failure during training (non-finite loss or parameters).
// CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

// Splits on ASCII whitespace, dropping empty fields.
std::vector<std::string> SplitWords(const std::string& text);

// Joins words with single spaces.
std::string JoinWords(const Command& command);

// Reads a text file as a list of commands, one per line, skipping blank
// lines.  Throws DataError if the file cannot be opened.
std::vector<Command> ReadCommandFile(const std::string& path);

// Writes one command per line.
void WriteCommandFile(const std::string& path,
                      const std::vector<Command>& commands);

// Reads the whole file into a string.  Throws DataError on failure.
std::string ReadTextFile(const std::string& path);

void WriteTextFile(const std::string& path, const std::string& contents);

}  // namespace cmdlm

#endif  // CMDLM_TYPES_H_
