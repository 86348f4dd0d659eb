// associate.cc
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

#include "cmdlm/associate.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cmdlm/rng.h"

namespace cmdlm {

namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string Where(const std::string& path, size_t line_no) {
  std::ostringstream os;
  os << path << ":" << line_no;
  return os.str();
}

}  // namespace

std::vector<KeywordMatch> FindKeywords(const Command& command,
                                       const KeywordLexicon& lex) {
  std::vector<KeywordMatch> matches;
  size_t i = 0;
  while (i < command.size()) {
    // Extend the candidate phrase word by word and remember the longest hit.
    std::string phrase;
    size_t hit_len = 0;
    std::string hit_phrase;
    for (size_t len = 1; i + len <= command.size(); ++len) {
      if (len > 1) phrase += ' ';
      phrase += command[i + len - 1];
      if (lex.entries.count(phrase)) {
        hit_len = len;
        hit_phrase = phrase;
      }
    }
    if (hit_len == 0) {
      ++i;
    } else {
      matches.push_back({hit_phrase, i, hit_len});
      i += hit_len;
    }
  }
  return matches;
}

double AssociationTable::Coverage() const {
  if (rows.empty()) return 0.0;
  size_t matched = 0;
  for (const AssociationRow& row : rows)
    if (row.matched()) ++matched;
  return static_cast<double>(matched) / static_cast<double>(rows.size());
}

AssociationTable Associate(const std::vector<Command>& commands,
                           const KeywordLexicon& lex, const ClassIndex& idx,
                           uint64_t seed) {
  std::set<std::string> missing;
  for (const auto& [phrase, classes] : lex.entries)
    for (const std::string& cls : classes)
      if (!idx.images.count(cls)) missing.insert(cls);
  if (!missing.empty()) {
    std::string list;
    for (const std::string& cls : missing) {
      if (!list.empty()) list += ", ";
      list += cls;
    }
    throw DataError("lexicon classes missing from the image index: " + list);
  }

  AssociationTable table;
  table.rows.reserve(commands.size());
  for (const Command& command : commands) {
    AssociationRow row;
    row.command_id = JoinWords(command);
    const std::vector<KeywordMatch> matches = FindKeywords(command, lex);
    if (!matches.empty()) {
      const KeywordMatch& m = matches.front();
      const std::vector<std::string>& classes = lex.entries.at(m.phrase);
      Rng rng(DeriveSeed(seed, {HashString(row.command_id)}));
      row.keyword = m.phrase;
      row.class_name = classes[rng.Below(classes.size())];
      const std::vector<std::string>& ids = idx.images.at(row.class_name);
      row.image_id = ids[rng.Below(ids.size())];
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

KeywordLexicon ReadKeywordLexicon(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open lexicon: " + path);
  KeywordLexicon lex;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 2)
      throw DataError("lexicon line needs keyword<TAB>classes at " +
                      Where(path, line_no));
    const std::string phrase = JoinWords(SplitWords(fields[0]));
    if (phrase.empty())
      throw DataError("empty keyword at " + Where(path, line_no));
    for (char c : phrase)
      if (c >= 'A' && c <= 'Z')
        throw DataError("keyword '" + phrase + "' must be lowercase at " +
                        Where(path, line_no));
    if (lex.entries.count(phrase))
      throw DataError("duplicate keyword '" + phrase + "' at " +
                      Where(path, line_no));
    std::vector<std::string> classes;
    std::istringstream cs(fields[1]);
    std::string cls;
    while (std::getline(cs, cls, ',')) {
      if (cls.empty())
        throw DataError("empty class name at " + Where(path, line_no));
      if (std::find(classes.begin(), classes.end(), cls) != classes.end())
        throw DataError("duplicate class '" + cls + "' for keyword '" +
                        phrase + "' at " + Where(path, line_no));
      classes.push_back(cls);
    }
    if (classes.empty())
      throw DataError("keyword '" + phrase + "' has no classes at " +
                      Where(path, line_no));
    lex.entries.emplace(phrase, std::move(classes));
  }
  return lex;
}

ClassIndex ReadClassIndex(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open class index: " + path);
  ClassIndex idx;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw DataError("index line needs class<TAB>image_id at " +
                      Where(path, line_no));
    std::vector<std::string>& ids = idx.images[fields[0]];
    if (std::find(ids.begin(), ids.end(), fields[1]) != ids.end())
      throw DataError("duplicate image '" + fields[1] + "' for class '" +
                      fields[0] + "' at " + Where(path, line_no));
    ids.push_back(fields[1]);
  }
  return idx;
}

void WriteAssociationTable(const std::string& path,
                           const AssociationTable& table) {
  std::ostringstream os;
  for (const AssociationRow& row : table.rows) {
    os << row.command_id << '\t'
       << (row.matched() ? row.image_id : std::string("NONE")) << '\t'
       << row.keyword << '\t' << row.class_name << '\n';
  }
  WriteTextFile(path, os.str());
}

AssociationTable ReadAssociationTable(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open association table: " + path);
  AssociationTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 4 || fields[0].empty() || fields[1].empty())
      throw DataError(
          "association line needs command<TAB>image<TAB>keyword<TAB>class "
          "at " +
          Where(path, line_no));
    AssociationRow row;
    row.command_id = fields[0];
    if (fields[1] != "NONE") row.image_id = fields[1];
    row.keyword = fields[2];
    row.class_name = fields[3];
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace cmdlm
