// wav.cc
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

#include "cmdlm/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cmdlm/types.h"

namespace cmdlm {

namespace {

uint32_t ReadU32(const char* p) {
  return static_cast<uint32_t>(static_cast<unsigned char>(p[0])) |
         static_cast<uint32_t>(static_cast<unsigned char>(p[1])) << 8 |
         static_cast<uint32_t>(static_cast<unsigned char>(p[2])) << 16 |
         static_cast<uint32_t>(static_cast<unsigned char>(p[3])) << 24;
}

uint16_t ReadU16(const char* p) {
  return static_cast<uint16_t>(static_cast<unsigned char>(p[0]) |
                               static_cast<unsigned char>(p[1]) << 8);
}

void AppendU32(std::string* s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void AppendU16(std::string* s, uint16_t v) {
  s->push_back(static_cast<char>(v & 0xff));
  s->push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioClip ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open wav file: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (data.size() < 12 || data.compare(0, 4, "RIFF") != 0 ||
      data.compare(8, 4, "WAVE") != 0) {
    throw DataError("not a RIFF/WAVE file: " + path);
  }

  AudioClip clip;
  bool have_fmt = false;
  bool have_data = false;
  size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const std::string id = data.substr(pos, 4);
    const uint32_t size = ReadU32(data.data() + pos + 4);
    pos += 8;
    if (pos + size > data.size()) {
      throw DataError("truncated wav chunk in " + path);
    }
    if (id == "fmt ") {
      if (size < 16) throw DataError("short fmt chunk in " + path);
      const uint16_t format = ReadU16(data.data() + pos);
      const uint16_t channels = ReadU16(data.data() + pos + 2);
      const uint32_t rate = ReadU32(data.data() + pos + 4);
      const uint16_t bits = ReadU16(data.data() + pos + 14);
      if (format != 1 || bits != 16) {
        throw DataError("only PCM16 wav is supported: " + path);
      }
      if (channels != 1) {
        throw DataError("only mono wav is supported: " + path);
      }
      clip.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError("data chunk before fmt in " + path);
      const size_t n = size / 2;
      clip.samples.reserve(n);
      for (size_t i = 0; i < n; ++i) {
        int16_t v;
        std::memcpy(&v, data.data() + pos + 2 * i, 2);
        clip.samples.push_back(static_cast<double>(v) / 32768.0);
      }
      have_data = true;
    }
    pos += size + (size & 1);  // chunks are word aligned
  }
  if (!have_data) throw DataError("wav file has no data chunk: " + path);
  if (clip.samples.empty()) throw DataError("wav file is empty: " + path);
  return clip;
}

void WriteWav(const std::string& path, const AudioClip& clip) {
  if (clip.samples.empty()) throw DataError("refusing to write empty wav");
  std::string body;
  body.reserve(44 + 2 * clip.samples.size());
  const uint32_t data_bytes = static_cast<uint32_t>(2 * clip.samples.size());
  body += "RIFF";
  AppendU32(&body, 36 + data_bytes);
  body += "WAVEfmt ";
  AppendU32(&body, 16);
  AppendU16(&body, 1);  // PCM
  AppendU16(&body, 1);  // mono
  AppendU32(&body, static_cast<uint32_t>(clip.sample_rate));
  AppendU32(&body, static_cast<uint32_t>(clip.sample_rate) * 2);
  AppendU16(&body, 2);   // block align
  AppendU16(&body, 16);  // bits per sample
  body += "data";
  AppendU32(&body, data_bytes);
  for (double x : clip.samples) {
    double v = std::round(std::clamp(x, -1.0, 1.0) * 32767.0);
    AppendU16(&body, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write wav file: " + path);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace cmdlm
