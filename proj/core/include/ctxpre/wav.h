// core/include/ctxpre/wav.h

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

#ifndef CTXPRE_WAV_H_
#define CTXPRE_WAV_H_

#include <span>
#include <string>
#include <vector>

namespace ctxpre {

inline constexpr int kSampleRate = 16000;

// Reads a mono PCM-16 16 kHz WAV file.  Samples are scaled to [-1, 1) by
// dividing by 32768.  Unknown RIFF chunks are skipped.  Throws DataError
// naming the offending field for any other encoding, channel count, rate,
// or bit depth.
std::vector<float> read_wav(const std::string& path);

// Writes a mono PCM-16 16 kHz WAV file.  Samples are clamped to [-1, 1],
// scaled by 32768 and rounded to the nearest representable level, so values
// already on the 1/32768 grid round-trip exactly.
void write_wav(const std::string& path, std::span<const float> samples);

}  // namespace ctxpre

#endif  // CTXPRE_WAV_H_
