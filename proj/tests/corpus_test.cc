// tests/corpus_test.cc

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

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "ctxpre/common.h"
#include "ctxpre/corpus.h"
#include "ctxpre/reference.h"

using namespace ctxpre;

namespace {

SynthSpec tiny_spec() {
  SynthSpec spec;
  spec.seed = 7;
  spec.total_minutes = 0.1;  // rounds up to one full block of 20 utterances
  spec.words_per_utterance = 3;
  return spec;
}

double spectral_centroid_hz(std::span<const float> x) {
  std::vector<double> xd(x.begin(), x.end());
  auto spectrum = reference::naive_dft(xd);
  const double hz_per_bin = 16000.0 / static_cast<double>(xd.size());
  double num = 0.0, den = 0.0;
  for (size_t k = 0; k <= xd.size() / 2; ++k) {
    const double mag = std::abs(spectrum[k]);
    num += static_cast<double>(k) * hz_per_bin * mag;
    den += mag;
  }
  return num / den;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("alignment parser reproduces a hand-built file field by field") {
  std::istringstream in(
      "# a comment line\n"
      "\n"
      "u0 0.000 0.100 p1 # p2 s0\n"
      "u0 0.100 0.250 p2 p1 # s0\n"
      "  u1 1.5 2.0 p0 p3 p4 s1\n");
  auto recs = parse_alignments(in, "fixture");
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].utterance_id == "u0");
  CHECK(recs[0].onset_s == 0.0);
  CHECK(recs[0].offset_s == 0.1);
  CHECK(recs[0].phone == "p1");
  CHECK(recs[0].prev_phone == kEdgePhone);
  CHECK(recs[0].next_phone == "p2");
  CHECK(recs[0].speaker == "s0");
  CHECK(recs[0].source_line == 3);
  CHECK(recs[1].next_phone == kEdgePhone);
  CHECK(recs[2].utterance_id == "u1");
  CHECK(recs[2].onset_s == 1.5);
  CHECK(recs[2].source_line == 5);
}

TEST_CASE("alignment parser rejects malformed lines with their line number") {
  std::istringstream missing("u0 0.0 0.1 p1 # p2\n");
  CHECK_THROWS_WITH_AS(parse_alignments(missing, "f"),
                       doctest::Contains("line 1"), DataError);
  std::istringstream extra("\nu0 0.0 0.1 p1 # p2 s0 junk\n");
  CHECK_THROWS_WITH_AS(parse_alignments(extra, "f"),
                       doctest::Contains("line 2"), DataError);
  std::istringstream bad_time("u0 zero 0.1 p1 # p2 s0\n");
  CHECK_THROWS_WITH_AS(parse_alignments(bad_time, "f"),
                       doctest::Contains("bad time"), DataError);
}

TEST_CASE("alignment validation rejects inconsistent records") {
  Utterance utt;
  utt.id = "u0";
  utt.speaker = "s0";
  utt.subset = "train";
  utt.samples.assign(16000, 0.0f);  // one second
  std::vector<Utterance> utts = {utt};

  auto parse = [](const char* text) {
    std::istringstream in(text);
    return parse_alignments(in, "f");
  };

  auto ok = parse("u0 0.0 0.4 p0 # p1 s0\nu0 0.4 1.0 p1 p0 # s0\n");
  validate_alignments(ok, utts);
  CHECK(ok.size() == 2);

  auto unknown = parse("u9 0.0 0.4 p0 # p1 s0\n");
  CHECK_THROWS_WITH_AS(validate_alignments(unknown, utts),
                       doctest::Contains("unknown utterance"), DataError);

  auto negative = parse("u0 0.5 0.4 p0 # p1 s0\n");
  CHECK_THROWS_WITH_AS(validate_alignments(negative, utts),
                       doctest::Contains("onset < offset"), DataError);

  auto overlap = parse("u0 0.0 0.5 p0 # p1 s0\nu0 0.4 0.9 p1 p0 # s0\n");
  CHECK_THROWS_WITH_AS(validate_alignments(overlap, utts),
                       doctest::Contains("overlaps"), DataError);

  auto past_end = parse("u0 0.5 1.5 p0 # p1 s0\n");
  CHECK_THROWS_WITH_AS(validate_alignments(past_end, utts),
                       doctest::Contains("past utterance end"), DataError);

  auto wrong_speaker = parse("u0 0.0 0.4 p0 # p1 s3\n");
  CHECK_THROWS_WITH_AS(validate_alignments(wrong_speaker, utts),
                       doctest::Contains("speaker"), DataError);

  std::vector<AlignmentRecord> empty;
  validate_alignments(empty, utts);
  CHECK(empty.empty());
}

TEST_CASE("frame spans round onsets up and offsets down") {
  AlignmentRecord rec;
  rec.onset_s = 0.0;
  rec.offset_s = 0.1;
  auto span = alignment_frame_span(rec, 0.01);
  REQUIRE(span.has_value());
  CHECK(span->begin == 0);
  CHECK(span->end == 10);
  CHECK(span->length() == 10);

  rec.onset_s = 0.123;
  rec.offset_s = 0.271;
  span = alignment_frame_span(rec, 0.01);
  REQUIRE(span.has_value());
  CHECK(span->begin == 13);
  CHECK(span->end == 27);

  // A span shorter than one hop covers no whole frame.
  rec.onset_s = 0.123;
  rec.offset_s = 0.129;
  CHECK(!alignment_frame_span(rec, 0.01).has_value());
}

TEST_CASE("synthesis is bit-identical for a fixed seed") {
  auto a = synth_corpus(tiny_spec());
  auto b = synth_corpus(tiny_spec());
  REQUIRE(a.utterances.size() == b.utterances.size());
  REQUIRE(a.alignments.size() == b.alignments.size());
  for (size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].id == b.utterances[i].id);
    CHECK(a.utterances[i].samples.size() == b.utterances[i].samples.size());
    CHECK(std::memcmp(a.utterances[i].samples.data(),
                      b.utterances[i].samples.data(),
                      a.utterances[i].samples.size() * sizeof(float)) == 0);
  }
  SynthSpec other = tiny_spec();
  other.seed = 8;
  auto c = synth_corpus(other);
  bool any_diff = false;
  for (size_t i = 0; i < std::min(a.utterances.size(), c.utterances.size());
       ++i) {
    any_diff = any_diff ||
               a.utterances[i].samples != c.utterances[i].samples;
  }
  CHECK(any_diff);
}

TEST_CASE("synthetic corpus structure matches the block schedule") {
  auto corpus = synth_corpus(tiny_spec());
  REQUIRE(corpus.utterances.size() % 20 == 0);
  std::map<std::string, int> subset_counts;
  std::set<std::string> speakers;
  for (const auto& u : corpus.utterances) {
    subset_counts[u.subset]++;
    speakers.insert(u.speaker);
  }
  const int blocks = static_cast<int>(corpus.utterances.size()) / 20;
  CHECK(subset_counts["train"] == 16 * blocks);
  CHECK(subset_counts["dev-clean"] == blocks);
  CHECK(subset_counts["dev-other"] == blocks);
  CHECK(subset_counts["test-clean"] == blocks);
  CHECK(subset_counts["test-other"] == blocks);
  CHECK(speakers.size() == 4);

  // Alignments tile each utterance exactly, on the 10 ms grid.
  validate_alignments(corpus.alignments, corpus.utterances);
  std::map<std::string, double> cursor;
  for (const auto& u : corpus.utterances) cursor[u.id] = 0.0;
  for (const auto& r : corpus.alignments) {
    CHECK(r.onset_s == doctest::Approx(cursor[r.utterance_id]).epsilon(1e-12));
    const double on_grid = std::round(r.offset_s * 100.0) / 100.0;
    CHECK(r.offset_s == doctest::Approx(on_grid).epsilon(1e-12));
    cursor[r.utterance_id] = r.offset_s;
  }
  for (const auto& u : corpus.utterances)
    CHECK(cursor[u.id] == doctest::Approx(u.duration_s()).epsilon(1e-12));

  // Edge sentinels appear exactly at utterance edges.
  std::map<std::string, int> first_count, last_count;
  for (const auto& r : corpus.alignments) {
    if (r.prev_phone == kEdgePhone) first_count[r.utterance_id]++;
    if (r.next_phone == kEdgePhone) last_count[r.utterance_id]++;
  }
  for (const auto& u : corpus.utterances) {
    CHECK(first_count[u.id] == 1);
    CHECK(last_count[u.id] == 1);
  }
}

TEST_CASE("noise-free repeats of a phone by one speaker are identical") {
  SynthSpec spec = tiny_spec();
  spec.noise_level = 0.0;
  auto corpus = synth_corpus(spec);
  // Collect sample slices keyed by (phone, speaker, duration).
  std::map<std::tuple<std::string, std::string, int>,
           std::vector<std::vector<float>>>
      instances;
  for (const auto& r : corpus.alignments) {
    const Utterance* u = corpus.find(r.utterance_id);
    REQUIRE(u != nullptr);
    const int begin = static_cast<int>(std::lround(r.onset_s * 16000.0));
    const int end = static_cast<int>(std::lround(r.offset_s * 16000.0));
    std::vector<float> cut(u->samples.begin() + begin,
                           u->samples.begin() + end);
    instances[{r.phone, u->speaker, end - begin}].push_back(std::move(cut));
  }
  int compared = 0;
  for (const auto& [key, cuts] : instances) {
    for (size_t i = 1; i < cuts.size(); ++i) {
      CHECK(cuts[i] == cuts[0]);
      ++compared;
    }
  }
  CHECK(compared > 0);
}

TEST_CASE("distinct phones have distinct spectral centroids") {
  SynthSpec spec = tiny_spec();
  spec.noise_level = 0.0;
  auto corpus = synth_corpus(spec);
  // One representative cut per phone, same speaker for a fair comparison.
  std::map<std::string, double> centroid;
  for (const auto& r : corpus.alignments) {
    const Utterance* u = corpus.find(r.utterance_id);
    if (u->speaker != "s1" || centroid.count(r.phone)) continue;
    const int begin = static_cast<int>(std::lround(r.onset_s * 16000.0));
    const int end = static_cast<int>(std::lround(r.offset_s * 16000.0));
    centroid[r.phone] = spectral_centroid_hz(
        std::span<const float>(u->samples.data() + begin,
                               static_cast<size_t>(end - begin)));
  }
  REQUIRE(centroid.size() >= 4);
  std::vector<double> values;
  for (const auto& [phone, c] : centroid) values.push_back(c);
  std::sort(values.begin(), values.end());
  for (size_t i = 1; i < values.size(); ++i)
    CHECK(values[i] > values[i - 1] * 1.05);
}

TEST_CASE("phone base frequencies are geometric and speaker factors centered") {
  SynthSpec spec;
  const double r = phone_base_frequency(spec, 1) / phone_base_frequency(spec, 0);
  for (int p = 1; p + 1 < spec.n_phones; ++p) {
    CHECK(phone_base_frequency(spec, p + 1) / phone_base_frequency(spec, p) ==
          doctest::Approx(r).epsilon(1e-9));
  }
  CHECK(phone_base_frequency(spec, 0) == doctest::Approx(spec.base_fmin_hz));
  CHECK(phone_base_frequency(spec, spec.n_phones - 1) ==
        doctest::Approx(spec.base_fmax_hz));
  double product = 1.0;
  for (int s = 0; s < spec.n_speakers; ++s) product *= speaker_factor(spec, s);
  CHECK(product == doctest::Approx(1.0).epsilon(1e-9));  // centered spread
  CHECK(speaker_factor(spec, 1) < speaker_factor(spec, 2));
}

TEST_CASE("degenerate synthesis specs are rejected") {
  SynthSpec spec;
  spec.duration_mean_s = 0.0;
  CHECK_THROWS_AS(synth_corpus(spec), std::invalid_argument);
  spec = SynthSpec();
  spec.n_phones = 1;
  CHECK_THROWS_AS(synth_corpus(spec), std::invalid_argument);
  spec = SynthSpec();
  spec.base_fmax_hz = 3000.0;  // top partial would cross Nyquist
  CHECK_THROWS_AS(synth_corpus(spec), std::invalid_argument);
}

TEST_CASE("corpus save and load round-trips bit for bit") {
  namespace fs = std::filesystem;
  const std::string dir =
      (fs::temp_directory_path() / "ctxpre_corpus_roundtrip").string();
  fs::remove_all(dir);
  auto corpus = synth_corpus(tiny_spec());
  save_corpus(corpus, dir);
  auto back = load_corpus(dir);
  REQUIRE(back.utterances.size() == corpus.utterances.size());
  REQUIRE(back.alignments.size() == corpus.alignments.size());
  for (size_t i = 0; i < corpus.utterances.size(); ++i) {
    const auto& a = corpus.utterances[i];
    const auto& b = back.utterances[i];
    CHECK(a.id == b.id);
    CHECK(a.speaker == b.speaker);
    CHECK(a.subset == b.subset);
    REQUIRE(a.samples.size() == b.samples.size());
    // Synthesis already quantizes to the PCM-16 grid, so equality is exact.
    CHECK(std::memcmp(a.samples.data(), b.samples.data(),
                      a.samples.size() * sizeof(float)) == 0);
  }
  for (size_t i = 0; i < corpus.alignments.size(); ++i) {
    const auto& a = corpus.alignments[i];
    const auto& b = back.alignments[i];
    CHECK(a.utterance_id == b.utterance_id);
    CHECK(a.phone == b.phone);
    CHECK(a.prev_phone == b.prev_phone);
    CHECK(a.next_phone == b.next_phone);
    CHECK(a.speaker == b.speaker);
    CHECK(b.onset_s == doctest::Approx(a.onset_s).epsilon(1e-9));
    CHECK(b.offset_s == doctest::Approx(a.offset_s).epsilon(1e-9));
  }
  fs::remove_all(dir);
}

}  // TEST_SUITE("corpus")
