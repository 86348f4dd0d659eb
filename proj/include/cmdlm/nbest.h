// nbest.h
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
// Ranked hypothesis lists produced by a first-pass recognizer.  Stored on
// disk as one JSON object per line:
//
//   {"utt_id": "u1", "ref": "turn left", "image_id": "img3",
//    "hyps": [{"text": "turn left", "ac": -12.1, "lm": -3.4}, ...]}
//
// "ref", "image_id" and per-hypothesis "lm" are optional.  Scores are
// natural-log.  Lists are kept sorted by descending first-pass combined
// score (acoustic plus first-pass LM when present).

#ifndef CMDLM_NBEST_H_
#define CMDLM_NBEST_H_

#include <optional>
#include <string>
#include <vector>

#include "cmdlm/types.h"

namespace cmdlm {

struct Hypothesis {
  Command text;
  double acoustic_logscore = 0.0;
  std::optional<double> firstpass_lm_logscore;
};

struct NBestList {
  std::string utt_id;
  std::optional<Command> reference;
  std::optional<std::string> image_id;
  std::vector<Hypothesis> hyps;
};

inline double FirstpassCombined(const Hypothesis& h) {
  return h.acoustic_logscore + h.firstpass_lm_logscore.value_or(0.0);
}

// Stable sort by descending first-pass combined score.
void SortByFirstpass(NBestList& nb);

std::string NBestToJsonLine(const NBestList& nb);
NBestList NBestFromJsonLine(const std::string& line, int line_number);

// Reads a JSONL n-best file.  Each list is validated (nonempty hypothesis
// set) and normalized to first-pass order.
std::vector<NBestList> ReadNBestFile(const std::string& path);
void WriteNBestFile(const std::string& path,
                    const std::vector<NBestList>& lists);

}  // namespace cmdlm

#endif  // CMDLM_NBEST_H_
