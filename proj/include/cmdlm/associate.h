// associate.h
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
// Semi-automatic command-to-image association.  Keyword phrases found in a
// command name image classes; a class and then an image are drawn uniformly
// under a seed derived from the command text, so an association survives
// edits elsewhere in the corpus.

#ifndef CMDLM_ASSOCIATE_H_
#define CMDLM_ASSOCIATE_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cmdlm/types.h"

namespace cmdlm {

// Lowercase phrase (words joined by single spaces) to candidate classes.
struct KeywordLexicon {
  std::map<std::string, std::vector<std::string>> entries;
};

// Image class to the ids of its member images.
struct ClassIndex {
  std::map<std::string, std::vector<std::string>> images;
};

struct KeywordMatch {
  std::string phrase;
  size_t begin = 0;   // word offset in the command
  size_t length = 0;  // words covered
};

// All non-overlapping matches, longest match first at each position,
// scanning left to right.
std::vector<KeywordMatch> FindKeywords(const Command& command,
                                       const KeywordLexicon& lex);

struct AssociationRow {
  std::string command_id;  // the command text itself
  std::string image_id;    // empty when unmatched
  std::string keyword;
  std::string class_name;

  bool matched() const { return !image_id.empty(); }
};

struct AssociationTable {
  std::vector<AssociationRow> rows;

  // Fraction of rows carrying an image id.
  double Coverage() const;
};

// One row per command, in input order.  The first keyword match decides the
// class list; class and image are drawn uniformly from their lists with a
// per-command seed, so permuting the input permutes rows without changing
// any outcome.  Throws DataError up front if the lexicon names classes the
// index lacks, listing all of them.
AssociationTable Associate(const std::vector<Command>& commands,
                           const KeywordLexicon& lex, const ClassIndex& idx,
                           uint64_t seed);

// TSV `keyword<TAB>class1,class2,...`.  Phrases must be nonempty and
// lowercase, class lists nonempty and free of duplicates.
KeywordLexicon ReadKeywordLexicon(const std::string& path);

// TSV `class<TAB>image_id`, one row per image.
ClassIndex ReadClassIndex(const std::string& path);

// TSV `command_id<TAB>image_id|NONE<TAB>keyword<TAB>class`.  Unmatched rows
// write NONE with empty provenance fields.
void WriteAssociationTable(const std::string& path,
                           const AssociationTable& table);
AssociationTable ReadAssociationTable(const std::string& path);

}  // namespace cmdlm

#endif  // CMDLM_ASSOCIATE_H_
