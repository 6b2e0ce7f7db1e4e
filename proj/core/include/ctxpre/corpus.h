// core/include/ctxpre/corpus.h

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

#ifndef CTXPRE_CORPUS_H_
#define CTXPRE_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ctxpre {

// Sentinel context label for phones at utterance edges.
inline constexpr const char* kEdgePhone = "#";

struct Utterance {
  std::string id;
  std::string speaker;
  std::string subset;  // train, dev-clean, dev-other, test-clean, test-other
  std::vector<float> samples;  // 16 kHz, in [-1, 1]

  double duration_s() const;
};

// One phone span from a forced alignment.  Times are seconds from utterance
// start; spans within an utterance are non-overlapping and sorted.
struct AlignmentRecord {
  std::string utterance_id;
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::string phone;
  std::string prev_phone;
  std::string next_phone;
  std::string speaker;
  int source_line = 0;  // 1-based line in the item file, 0 if synthetic
};

struct Corpus {
  std::vector<Utterance> utterances;
  std::vector<AlignmentRecord> alignments;

  const Utterance* find(const std::string& id) const;
};

// Item-file format: one record per line,
//   utterance_id onset_s offset_s phone prev_phone next_phone speaker
// with blank lines and # comments ignored.  Parse errors carry line numbers.
std::vector<AlignmentRecord> parse_alignments(std::istream& in,
                                              const std::string& origin);
std::vector<AlignmentRecord> load_alignments(const std::string& path);
void write_alignments(std::ostream& out,
                      const std::vector<AlignmentRecord>& records);

// Sorts records by (utterance, onset) and rejects negative-duration spans,
// overlaps, spans past the utterance end, and unknown utterance ids, naming
// the offending line.
void validate_alignments(std::vector<AlignmentRecord>& records,
                         const std::vector<Utterance>& utterances);

// Frame range [begin, end) covered by a record at the given hop: onset
// rounds up, offset rounds down, so no frame is attributed to two phones.
// Returns nullopt for spans that cover no whole frame.
struct FrameSpan {
  int begin = 0;
  int end = 0;
  int length() const { return end - begin; }
};
std::optional<FrameSpan> alignment_frame_span(const AlignmentRecord& rec,
                                              double hop_s);

// Synthetic labeled phone corpus.  Each phone is a fixed chord of three
// partials at a phone-specific base frequency; base frequencies are spaced
// geometrically over [base_fmin_hz, base_fmax_hz] so distinct phones have
// distinct spectral centroids by construction.  Speakers scale all
// frequencies by (1 + speaker_spread) ** (s - (n_speakers - 1) / 2).
// Utterances are sequences of three-phone words, center phone uniform over
// the inventory and the flanking pair drawn from two fixed context pairs,
// which guarantees recurring (prev, next) contexts for the evaluation.
// Durations are normal, clipped symmetrically about the mean, and rounded
// to the hop grid so alignment boundaries are exact by construction.
// Subsets cycle in blocks of twenty utterances: sixteen train, then one
// each of dev-clean, dev-other, test-clean, test-other, with the speaker
// rotated across blocks; the *-other subsets get noise_level *
// other_noise_factor.  Everything derives from `seed` alone.
struct SynthSpec {
  uint64_t seed = 1;
  int n_phones = 8;
  int n_speakers = 4;
  double total_minutes = 20.0;
  int words_per_utterance = 7;
  double duration_mean_s = 0.09;
  double duration_std_s = 0.05;
  double amplitude = 0.25;
  double noise_level = 0.02;
  double other_noise_factor = 2.0;
  double speaker_spread = 0.12;
  double base_fmin_hz = 250.0;
  double base_fmax_hz = 1600.0;

  void validate() const;  // throws std::invalid_argument
};

double phone_base_frequency(const SynthSpec& spec, int phone);
double speaker_factor(const SynthSpec& spec, int speaker);
std::string phone_label(int phone);
std::string speaker_label(int speaker);

Corpus synth_corpus(const SynthSpec& spec);

// On-disk layout: <dir>/manifest.tsv (id, speaker, subset per line),
// <dir>/alignments.item, <dir>/wav/<id>.wav.
void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace ctxpre

#endif  // CTXPRE_CORPUS_H_
