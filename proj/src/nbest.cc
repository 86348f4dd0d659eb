// nbest.cc
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

#include "cmdlm/nbest.h"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace cmdlm {

using nlohmann::json;

void SortByFirstpass(NBestList& nb) {
  std::stable_sort(nb.hyps.begin(), nb.hyps.end(),
                   [](const Hypothesis& a, const Hypothesis& b) {
                     return FirstpassCombined(a) > FirstpassCombined(b);
                   });
}

std::string NBestToJsonLine(const NBestList& nb) {
  json j;
  j["utt_id"] = nb.utt_id;
  if (nb.reference) j["ref"] = JoinWords(*nb.reference);
  if (nb.image_id) j["image_id"] = *nb.image_id;
  json hyps = json::array();
  for (const Hypothesis& h : nb.hyps) {
    json jh;
    jh["text"] = JoinWords(h.text);
    jh["ac"] = h.acoustic_logscore;
    if (h.firstpass_lm_logscore) jh["lm"] = *h.firstpass_lm_logscore;
    hyps.push_back(std::move(jh));
  }
  j["hyps"] = std::move(hyps);
  return j.dump();
}

NBestList NBestFromJsonLine(const std::string& line, int line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError("n-best line " + std::to_string(line_number) +
                    ": invalid JSON: " + e.what());
  }
  NBestList nb;
  try {
    nb.utt_id = j.at("utt_id").get<std::string>();
    if (j.contains("ref")) nb.reference = SplitWords(j["ref"].get<std::string>());
    if (j.contains("image_id")) nb.image_id = j["image_id"].get<std::string>();
    for (const json& jh : j.at("hyps")) {
      Hypothesis h;
      h.text = SplitWords(jh.at("text").get<std::string>());
      h.acoustic_logscore = jh.at("ac").get<double>();
      if (jh.contains("lm")) h.firstpass_lm_logscore = jh["lm"].get<double>();
      nb.hyps.push_back(std::move(h));
    }
  } catch (const json::exception& e) {
    throw DataError("n-best line " + std::to_string(line_number) +
                    ": missing or malformed field: " + e.what());
  }
  if (nb.hyps.empty()) {
    throw DataError("n-best line " + std::to_string(line_number) +
                    ": empty hypothesis list");
  }
  return nb;
}

std::vector<NBestList> ReadNBestFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open n-best file: " + path);
  std::vector<NBestList> lists;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    NBestList nb = NBestFromJsonLine(line, line_number);
    SortByFirstpass(nb);
    lists.push_back(std::move(nb));
  }
  return lists;
}

void WriteNBestFile(const std::string& path,
                    const std::vector<NBestList>& lists) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write n-best file: " + path);
  for (const NBestList& nb : lists) out << NBestToJsonLine(nb) << "\n";
}

}  // namespace cmdlm
