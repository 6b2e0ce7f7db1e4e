// core/include/ctxpre/abx.h

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

#ifndef CTXPRE_ABX_H_
#define CTXPRE_ABX_H_

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ctxpre/corpus.h"

namespace ctxpre {

// ---- Representation files ----------------------------------------------------

// Per-utterance frame matrix: magic, version, frame count, dim, row-major
// float32 values, all little-endian.
inline constexpr char kRepMagic[] = "ctxpre-rep";  // 10 bytes on disk
inline constexpr uint32_t kRepVersion = 1;

struct Representation {
  int64_t frames = 0;
  int64_t dim = 0;
  std::vector<float> values;  // row-major frames x dim
};

void write_rep_file(const std::string& path, const Representation& rep);
Representation read_rep_file(const std::string& path);  // throws DataError

// ---- Segments ------------------------------------------------------------------

// One aligned phone occurrence cut out of an utterance representation.
// Frames are normalized to unit length at ingest, so the angular distance
// reduces to arccos of a dot product and any positive rescaling of the
// input representation cancels.
struct SegmentRep {
  std::vector<double> frames;  // row-major n x dim, unit-norm rows
  int n = 0;
  int dim = 0;
  std::string phone;
  std::string prev;
  std::string next;
  std::string speaker;
  std::string subset;

  std::span<const double> frame(int i) const {
    return {frames.data() + static_cast<size_t>(i) * dim,
            static_cast<size_t>(dim)};
  }
};

// Cuts one utterance's aligned phone segments out of its representation.
// records must all belong to the utterance, be sorted by onset, and use the
// 10 ms hop grid of the representation.  Records whose frame span is empty
// are skipped.  With widen_context, each segment is extended to cover its
// direct neighbors (one phone on each side) while keeping its own labels.
// Throws NumericalError if a covered frame has zero norm.
std::vector<SegmentRep> cut_segments(const Representation& rep,
                                     std::span<const AlignmentRecord> records,
                                     const std::string& subset, double hop_s,
                                     bool widen_context);

// ---- Distances -----------------------------------------------------------------

// arccos of the cosine similarity, scaled into [0, 1].  Rejects zero-norm
// inputs (NumericalError).
double angular_distance(std::span<const double> u, std::span<const double> v);

// Minimum over monotone alignment paths (diagonal/right/down steps, both
// endpoints anchored) of the summed per-pair angular distance divided by
// the number of path nodes.  Symmetric; 0 for identical sequences.
// Rejects empty sequences (std::invalid_argument).
double dtw_divergence(const SegmentRep& a, const SegmentRep& b);

// ---- Triple scoring -------------------------------------------------------------

// Ordered triples (A, B, X): A and X distinct members of a_class, B from
// b_class; a triple scores 1 when d(A, X) > d(B, X), 0.5 on ties, else 0.
// Returns the mean over all triples.  Requires |a_class| >= 2 and
// |b_class| >= 1 (std::invalid_argument otherwise).
double abx_error(const std::vector<const SegmentRep*>& a_class,
                 const std::vector<const SegmentRep*>& b_class);

// ---- Conditions and the report ---------------------------------------------------

struct Condition {
  std::string subset;        // dev-clean, dev-other, test-clean, test-other
  bool within_speaker = true;   // false: A,B share a speaker, X uses another
  bool within_context = true;   // false: no (prev, next) constraint

  std::string name() const;  // e.g. "dev-clean/within-speaker/any-context"
};

// The sixteen conditions in fixed report order.
std::vector<Condition> all_conditions();

// Comma-separated tokens restrict the report: subset names and the factor
// tokens within-speaker / across-speaker / within-context / any-context.
// Tokens of one factor combine with OR, factors combine with AND; an empty
// filter keeps everything.  Unknown tokens throw std::invalid_argument.
struct ConditionFilter {
  std::set<std::string> subsets;            // empty = all
  std::optional<bool> within_speaker;
  std::optional<bool> within_context;
};
ConditionFilter parse_condition_filter(const std::string& csv);
bool condition_selected(const Condition& condition,
                        const ConditionFilter& filter);

// Evaluation options (bound to the [abx] config section).
struct AbxConfig {
  // Weight each symmetrized phone-pair cell by its triple count instead of
  // uniformly when averaging a condition.
  bool weight_by_triples = false;
  // Condition filter source text (see parse_condition_filter).
  std::string conditions;
  // Widen segments with one neighboring phone on each side.
  bool triphone_segments = false;

  void validate() const;
};

struct ConditionResult {
  Condition condition;
  double error = 0.0;         // meaningful when triples > 0
  int64_t triples = 0;        // scored triples
  int64_t cells = 0;          // symmetrized phone-pair cells that scored
  int64_t skipped_cells = 0;  // ordered cells with too few segments
};

struct AbxReport {
  std::vector<ConditionResult> conditions;  // selected, fixed order
  double mean = 0.0;          // arithmetic mean over scored conditions
  int64_t scored_conditions = 0;

  // Line-oriented text: one `key = value` per cell plus the mean.
  std::string to_text() const;
};

// Scores every selected condition.  Within a condition, triples are grouped
// into cells keyed by (phone pair, speaker assignment, context); each
// ordered cell is averaged with its mirrored (b, a) cell, then cells
// combine uniformly (or by triple count, see AbxConfig).  Conditions with
// no scorable cell are reported with triples == 0 and excluded from the
// mean.  Throws DataError when nothing scored at all.
AbxReport evaluate_abx(const std::vector<SegmentRep>& segments,
                       const AbxConfig& cfg);

}  // namespace ctxpre

#endif  // CTXPRE_ABX_H_
