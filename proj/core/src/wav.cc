// core/src/wav.cc

// Copyright 2026  ctxpre authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "ctxpre/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ctxpre/common.h"

namespace ctxpre {

namespace {

// All WAV fields are little-endian; so are the supported hosts, but the
// byte-wise codecs below keep the file format independent of that.
uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

std::vector<float> read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require_data(in.good(), "wav: cannot open ", path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t n = bytes.size();
  require_data(n >= 12 && std::memcmp(p, "RIFF", 4) == 0 &&
                   std::memcmp(p + 8, "WAVE", 4) == 0,
               "wav: ", path, " is not a RIFF/WAVE file");

  bool have_fmt = false;
  size_t data_at = 0, data_len = 0;
  for (size_t at = 12; at + 8 <= n;) {
    const uint32_t len = read_u32(p + at + 4);
    const size_t body = at + 8;
    require_data(body + len <= n, "wav: ", path, " truncated chunk at byte ",
                 at);
    if (std::memcmp(p + at, "fmt ", 4) == 0) {
      require_data(len >= 16, "wav: ", path, " fmt chunk too short");
      const uint16_t format = read_u16(p + body);
      const uint16_t channels = read_u16(p + body + 2);
      const uint32_t rate = read_u32(p + body + 4);
      const uint16_t bits = read_u16(p + body + 14);
      require_data(format == 1, "wav: ", path, " audio format ", format,
                   " is not PCM");
      require_data(channels == 1, "wav: ", path, " has ", channels,
                   " channels, need mono");
      require_data(rate == static_cast<uint32_t>(kSampleRate), "wav: ", path,
                   " sample rate ", rate, " is not ", kSampleRate);
      require_data(bits == 16, "wav: ", path, " bit depth ", bits,
                   " is not 16");
      have_fmt = true;
    } else if (std::memcmp(p + at, "data", 4) == 0) {
      data_at = body;
      data_len = len;
    }
    at = body + len + (len & 1);  // chunks are word-aligned
  }
  require_data(have_fmt, "wav: ", path, " has no fmt chunk");
  require_data(data_at != 0, "wav: ", path, " has no data chunk");
  require_data(data_len % 2 == 0, "wav: ", path, " has odd data length");

  std::vector<float> samples(data_len / 2);
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto v =
        static_cast<int16_t>(read_u16(p + data_at + 2 * i));
    samples[i] = static_cast<float>(v) / 32768.0f;
  }
  return samples;
}

void write_wav(const std::string& path, std::span<const float> samples) {
  const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  out.append("RIFF");
  put_u32(out, 36 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, kSampleRate);
  put_u32(out, kSampleRate * 2);  // bytes per second
  put_u16(out, 2);                // block align
  put_u16(out, 16);               // bits per sample
  out.append("data");
  put_u32(out, data_len);
  for (float x : samples) {
    const double scaled = std::lround(std::clamp(x, -1.0f, 1.0f) * 32768.0);
    const auto v = static_cast<int16_t>(
        std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require_data(f.good(), "wav: cannot open ", path, " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require_data(f.good(), "wav: write failed for ", path);
}

}  // namespace ctxpre
