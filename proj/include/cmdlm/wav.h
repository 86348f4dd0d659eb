// wav.h
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
// Minimal WAV I/O: PCM16 mono only.  Amplitudes are exposed as doubles in
// [-1, 1]; quantization happens on write.

#ifndef CMDLM_WAV_H_
#define CMDLM_WAV_H_

#include <string>
#include <vector>

namespace cmdlm {

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;
};

AudioClip ReadWav(const std::string& path);
void WriteWav(const std::string& path, const AudioClip& clip);

}  // namespace cmdlm

#endif  // CMDLM_WAV_H_
