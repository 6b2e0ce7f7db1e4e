// core/src/corpus.cc

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

#include "ctxpre/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "ctxpre/common.h"
#include "ctxpre/rng.h"
#include "ctxpre/wav.h"

namespace ctxpre {

namespace {

constexpr double kHopS = 0.010;
constexpr int kHopSamples = 160;
// Chord shape shared by all phones: partial frequency ratios and weights.
// Non-integer ratios keep partials of different phones from colliding.
constexpr double kPartialRatio[3] = {1.0, 2.1, 3.3};
constexpr double kPartialWeight[3] = {1.0, 0.6, 0.35};
constexpr double kRoundEps = 1e-6;

const char* const kSubsetCycle[4] = {"dev-clean", "dev-other", "test-clean",
                                     "test-other"};

float quantize_pcm16(double x) {
  const double scaled = std::lround(std::clamp(x, -1.0, 1.0) * 32768.0);
  return static_cast<float>(std::clamp(scaled, -32768.0, 32767.0) / 32768.0);
}

}  // namespace

double Utterance::duration_s() const {
  return static_cast<double>(samples.size()) / kSampleRate;
}

const Utterance* Corpus::find(const std::string& id) const {
  for (const auto& u : utterances)
    if (u.id == id) return &u;
  return nullptr;
}

std::vector<AlignmentRecord> parse_alignments(std::istream& in,
                                              const std::string& origin) {
  std::vector<AlignmentRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t first = line.find_first_not_of(" \t\r");
    // Only whole-line comments: the edge sentinel '#' appears as a field.
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    AlignmentRecord rec;
    std::string onset, offset, extra;
    fields >> rec.utterance_id >> onset >> offset >> rec.phone >>
        rec.prev_phone >> rec.next_phone >> rec.speaker;
    require_data(!fields.fail(), "alignments: ", origin, " line ", line_no,
                 ": expected 7 fields");
    require_data(!(fields >> extra), "alignments: ", origin, " line ", line_no,
                 ": trailing field '", extra, "'");
    try {
      size_t used = 0;
      rec.onset_s = std::stod(onset, &used);
      require_data(used == onset.size(), "");
      rec.offset_s = std::stod(offset, &used);
      require_data(used == offset.size(), "");
    } catch (const std::exception&) {
      throw DataError(internal::format_message(
          "alignments: ", origin, " line ", line_no, ": bad time field"));
    }
    rec.source_line = line_no;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<AlignmentRecord> load_alignments(const std::string& path) {
  std::ifstream in(path);
  require_data(in.good(), "alignments: cannot open ", path);
  return parse_alignments(in, path);
}

void write_alignments(std::ostream& out,
                      const std::vector<AlignmentRecord>& records) {
  out << "# utterance_id onset_s offset_s phone prev_phone next_phone "
         "speaker\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& r : records) {
    out << r.utterance_id << ' ' << r.onset_s << ' ' << r.offset_s << ' '
        << r.phone << ' ' << r.prev_phone << ' ' << r.next_phone << ' '
        << r.speaker << '\n';
  }
}

void validate_alignments(std::vector<AlignmentRecord>& records,
                         const std::vector<Utterance>& utterances) {
  std::unordered_map<std::string, const Utterance*> by_id;
  for (const auto& u : utterances) by_id[u.id] = &u;
  std::stable_sort(records.begin(), records.end(),
                   [](const AlignmentRecord& a, const AlignmentRecord& b) {
                     return a.utterance_id != b.utterance_id
                                ? a.utterance_id < b.utterance_id
                                : a.onset_s < b.onset_s;
                   });
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto it = by_id.find(r.utterance_id);
    require_data(it != by_id.end(), "alignments: line ", r.source_line,
                 ": unknown utterance '", r.utterance_id, "'");
    require_data(r.onset_s >= 0.0 && r.offset_s > r.onset_s,
                 "alignments: line ", r.source_line,
                 ": need 0 <= onset < offset, got ", r.onset_s, " and ",
                 r.offset_s);
    require_data(r.offset_s <= it->second->duration_s() + kRoundEps,
                 "alignments: line ", r.source_line, ": offset ", r.offset_s,
                 " past utterance end ", it->second->duration_s());
    require_data(r.speaker == it->second->speaker, "alignments: line ",
                 r.source_line, ": speaker '", r.speaker,
                 "' does not match utterance speaker '", it->second->speaker,
                 "'");
    if (i > 0 && records[i - 1].utterance_id == r.utterance_id) {
      require_data(r.onset_s >= records[i - 1].offset_s - kRoundEps,
                   "alignments: line ", r.source_line, ": span starting at ",
                   r.onset_s, " overlaps previous span ending at ",
                   records[i - 1].offset_s);
    }
  }
}

std::optional<FrameSpan> alignment_frame_span(const AlignmentRecord& rec,
                                              double hop_s) {
  require(hop_s > 0.0, "alignment_frame_span: hop must be positive");
  FrameSpan span;
  span.begin = static_cast<int>(std::ceil(rec.onset_s / hop_s - kRoundEps));
  span.end = static_cast<int>(std::floor(rec.offset_s / hop_s + kRoundEps));
  if (span.end <= span.begin) return std::nullopt;
  return span;
}

void SynthSpec::validate() const {
  require(n_phones >= 2, "synth: need at least 2 phones, got ", n_phones);
  require(n_speakers >= 2, "synth: need at least 2 speakers, got ",
          n_speakers);
  require(total_minutes > 0.0, "synth: total_minutes must be positive");
  require(words_per_utterance >= 1, "synth: need at least one word");
  require(duration_mean_s > 0.0, "synth: phone duration mean must be positive");
  require(duration_std_s >= 0.0, "synth: duration std must be non-negative");
  require(amplitude > 0.0 && amplitude < 1.0, "synth: amplitude must be in (0, 1)");
  require(noise_level >= 0.0 && other_noise_factor >= 0.0,
          "synth: noise levels must be non-negative");
  require(speaker_spread >= 0.0, "synth: speaker_spread must be non-negative");
  require(base_fmin_hz > 0.0 && base_fmax_hz > base_fmin_hz,
          "synth: need 0 < base_fmin < base_fmax");
  const double top = base_fmax_hz * kPartialRatio[2] *
                     speaker_factor(*this, n_speakers - 1);
  require(top < kSampleRate / 2.0, "synth: highest partial ", top,
          " Hz exceeds Nyquist; lower base_fmax_hz or speaker_spread");
}

double phone_base_frequency(const SynthSpec& spec, int phone) {
  require(phone >= 0 && phone < spec.n_phones, "synth: bad phone index ",
          phone);
  const double ratio = spec.base_fmax_hz / spec.base_fmin_hz;
  return spec.base_fmin_hz *
         std::pow(ratio, static_cast<double>(phone) / (spec.n_phones - 1));
}

double speaker_factor(const SynthSpec& spec, int speaker) {
  require(speaker >= 0 && speaker < spec.n_speakers, "synth: bad speaker index ",
          speaker);
  const double centered = speaker - (spec.n_speakers - 1) / 2.0;
  return std::pow(1.0 + spec.speaker_spread, centered);
}

std::string phone_label(int phone) { return "p" + std::to_string(phone); }

std::string speaker_label(int speaker) { return "s" + std::to_string(speaker); }

namespace {

// Phone duration in whole hops: normal, clipped symmetrically about the
// mean (so the clip does not bias the mean), snapped to the hop grid.
int draw_duration_hops(const SynthSpec& spec, Rng& rng) {
  const double lo = std::max(0.02, spec.duration_mean_s - 1.2 * spec.duration_std_s);
  const double hi = spec.duration_mean_s + (spec.duration_mean_s - lo);
  double d = spec.duration_mean_s + spec.duration_std_s * rng.normal();
  d = std::clamp(d, lo, hi);
  return std::max(1, static_cast<int>(std::lround(d / kHopS)));
}

struct PhoneDraw {
  int phone = 0;
  int hops = 0;
};

}  // namespace

Corpus synth_corpus(const SynthSpec& spec) {
  spec.validate();
  const Rng root = Rng(spec.seed).child("synth");
  const double target_s = spec.total_minutes * 60.0;

  // The two fixed context pairs words are built from.
  const int ctx_pairs[2][2] = {{0, 1 % spec.n_phones},
                               {2 % spec.n_phones, 3 % spec.n_phones}};

  double weight_sum = 0.0;
  for (double w : kPartialWeight) weight_sum += w;

  Corpus corpus;
  double produced_s = 0.0;
  for (int u = 0;; ++u) {
    Rng ur = root.child(static_cast<uint64_t>(u));
    const int block = u / 20;
    const int pos = u % 20;
    const int speaker = (u + block) % spec.n_speakers;
    const std::string subset = pos < 16 ? "train" : kSubsetCycle[pos - 16];
    const bool other = subset.size() > 6 &&
                       subset.compare(subset.size() - 6, 6, "-other") == 0;
    const double noise =
        spec.noise_level * (other ? spec.other_noise_factor : 1.0);

    std::vector<PhoneDraw> seq;
    seq.reserve(static_cast<size_t>(spec.words_per_utterance) * 3);
    for (int w = 0; w < spec.words_per_utterance; ++w) {
      const int ctx = static_cast<int>(ur.uniform_int(2));
      const int center = static_cast<int>(
          ur.uniform_int(static_cast<uint64_t>(spec.n_phones)));
      for (int p : {ctx_pairs[ctx][0], center, ctx_pairs[ctx][1]})
        seq.push_back({p, draw_duration_hops(spec, ur)});
    }

    int total_hops = 0;
    for (const auto& d : seq) total_hops += d.hops;

    Utterance utt;
    {
      std::ostringstream id;
      id << 'u' << std::setw(6) << std::setfill('0') << u;
      utt.id = id.str();
    }
    utt.speaker = speaker_label(speaker);
    utt.subset = subset;
    utt.samples.assign(static_cast<size_t>(total_hops) * kHopSamples, 0.0f);

    const double sfac = speaker_factor(spec, speaker);
    int at_hop = 0;
    for (size_t i = 0; i < seq.size(); ++i) {
      const int len = seq[i].hops * kHopSamples;
      const int start = at_hop * kHopSamples;
      const double base = phone_base_frequency(spec, seq[i].phone) * sfac;
      const int ramp = std::min(80, len / 4);
      for (int n = 0; n < len; ++n) {
        double v = 0.0;
        for (int j = 0; j < 3; ++j) {
          const double phase = std::fmod(
              2.0 * std::numbers::pi * base * kPartialRatio[j] * n / kSampleRate,
              2.0 * std::numbers::pi);
          v += kPartialWeight[j] / weight_sum * std::sin(phase);
        }
        double env = 1.0;
        if (n < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * n / ramp);
        if (len - 1 - n < ramp)
          env = std::min(
              env, 0.5 - 0.5 * std::cos(std::numbers::pi * (len - 1 - n) / ramp));
        utt.samples[static_cast<size_t>(start + n)] =
            static_cast<float>(spec.amplitude * env * v);
      }

      AlignmentRecord rec;
      rec.utterance_id = utt.id;
      rec.onset_s = at_hop / 100.0;
      rec.offset_s = (at_hop + seq[i].hops) / 100.0;
      rec.phone = phone_label(seq[i].phone);
      rec.prev_phone = i == 0 ? kEdgePhone : phone_label(seq[i - 1].phone);
      rec.next_phone =
          i + 1 == seq.size() ? kEdgePhone : phone_label(seq[i + 1].phone);
      rec.speaker = utt.speaker;
      corpus.alignments.push_back(std::move(rec));
      at_hop += seq[i].hops;
    }

    if (noise > 0.0) {
      for (auto& s : utt.samples)
        s = static_cast<float>(s + noise * ur.normal());
    }
    for (auto& s : utt.samples) s = quantize_pcm16(s);

    produced_s += static_cast<double>(utt.samples.size()) / kSampleRate;
    corpus.utterances.push_back(std::move(utt));
    // Stop only on block boundaries so every subset keeps its share.
    if (produced_s >= target_s && (u + 1) % 20 == 0) break;
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "wav");
  {
    std::ofstream manifest(fs::path(dir) / "manifest.tsv");
    require_data(manifest.good(), "corpus: cannot write manifest in ", dir);
    for (const auto& u : corpus.utterances)
      manifest << u.id << '\t' << u.speaker << '\t' << u.subset << '\n';
    require_data(manifest.good(), "corpus: manifest write failed in ", dir);
  }
  {
    std::ofstream items(fs::path(dir) / "alignments.item");
    require_data(items.good(), "corpus: cannot write alignments in ", dir);
    write_alignments(items, corpus.alignments);
    require_data(items.good(), "corpus: alignments write failed in ", dir);
  }
  for (const auto& u : corpus.utterances)
    write_wav((fs::path(dir) / "wav" / (u.id + ".wav")).string(), u.samples);
}

Corpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / "manifest.tsv");
  require_data(manifest.good(), "corpus: cannot open manifest in ", dir);
  Corpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    Utterance u;
    std::string extra;
    if (!std::getline(fields, u.id, '\t') ||
        !std::getline(fields, u.speaker, '\t') ||
        !std::getline(fields, u.subset)) {
      throw DataError(internal::format_message("corpus: manifest line ",
                                               line_no, " malformed in ", dir));
    }
    u.samples = read_wav((fs::path(dir) / "wav" / (u.id + ".wav")).string());
    corpus.utterances.push_back(std::move(u));
  }
  corpus.alignments =
      load_alignments((fs::path(dir) / "alignments.item").string());
  validate_alignments(corpus.alignments, corpus.utterances);
  return corpus;
}

}  // namespace ctxpre
