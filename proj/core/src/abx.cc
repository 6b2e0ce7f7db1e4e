// core/src/abx.cc

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

#include "ctxpre/abx.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "ctxpre/common.h"

namespace ctxpre {

namespace {

constexpr std::streamsize kRepMagicLen = sizeof(kRepMagic) - 1;

// Joins key components; never occurs in phone or speaker labels.
constexpr char kSep = '\x1f';

void put_le(std::ostream& out, uint64_t v, int bytes) {
  char b[8];
  for (int i = 0; i < bytes; ++i)
    b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, bytes);
}

uint64_t take_le(std::istream& in, int bytes, const std::string& path) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), bytes);
  require_data(in.gcount() == bytes, path, ": truncated representation file");
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

// ---- Representation files ----------------------------------------------------

void write_rep_file(const std::string& path, const Representation& rep) {
  require(rep.frames > 0 && rep.dim > 0,
          "write_rep_file: empty representation");
  require(static_cast<int64_t>(rep.values.size()) == rep.frames * rep.dim,
          "write_rep_file: values do not match frames x dim");
  std::ofstream out(path, std::ios::binary);
  require_data(out.good(), path, ": cannot open for writing");
  out.write(kRepMagic, kRepMagicLen);
  put_le(out, kRepVersion, 4);
  put_le(out, static_cast<uint64_t>(rep.frames), 8);
  put_le(out, static_cast<uint64_t>(rep.dim), 8);
  for (float v : rep.values) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_le(out, bits, 4);
  }
  out.flush();
  require_data(out.good(), path, ": write failed");
}

Representation read_rep_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require_data(in.good(), path, ": cannot open");
  char magic[sizeof(kRepMagic)] = {};
  in.read(magic, kRepMagicLen);
  require_data(in.gcount() == kRepMagicLen &&
                   std::memcmp(magic, kRepMagic, kRepMagicLen) == 0,
               path, ": not a representation file");
  const uint64_t version = take_le(in, 4, path);
  require_data(version == kRepVersion, path,
               ": unsupported representation version ", version);
  const uint64_t frames = take_le(in, 8, path);
  const uint64_t dim = take_le(in, 8, path);
  require_data(frames >= 1 && dim >= 1 && frames < (uint64_t{1} << 32) &&
                   dim < (uint64_t{1} << 20),
               path, ": implausible header (", frames, " frames, dim ", dim,
               ")");
  Representation rep;
  rep.frames = static_cast<int64_t>(frames);
  rep.dim = static_cast<int64_t>(dim);
  rep.values.resize(frames * dim);
  std::vector<unsigned char> buf(rep.values.size() * 4);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  require_data(in.gcount() == static_cast<std::streamsize>(buf.size()), path,
               ": truncated representation file");
  for (size_t i = 0; i < rep.values.size(); ++i) {
    uint32_t bits = 0;
    for (int k = 0; k < 4; ++k)
      bits |= static_cast<uint32_t>(buf[4 * i + k]) << (8 * k);
    std::memcpy(&rep.values[i], &bits, sizeof(bits));
  }
  require_data(in.peek() == std::char_traits<char>::eof(), path,
               ": trailing bytes after representation data");
  return rep;
}

// ---- Segments ------------------------------------------------------------------

std::vector<SegmentRep> cut_segments(const Representation& rep,
                                     std::span<const AlignmentRecord> records,
                                     const std::string& subset, double hop_s,
                                     bool widen_context) {
  require(hop_s > 0.0, "cut_segments: hop must be positive");
  require(rep.dim > 0 && static_cast<int64_t>(rep.values.size()) ==
                             rep.frames * rep.dim,
          "cut_segments: malformed representation");
  std::vector<std::optional<FrameSpan>> spans(records.size());
  for (size_t i = 0; i < records.size(); ++i)
    spans[i] = alignment_frame_span(records[i], hop_s);
  std::vector<SegmentRep> out;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!spans[i]) continue;
    int begin = spans[i]->begin;
    int end = spans[i]->end;
    if (widen_context) {
      if (i > 0 && spans[i - 1]) begin = std::min(begin, spans[i - 1]->begin);
      if (i + 1 < records.size() && spans[i + 1])
        end = std::max(end, spans[i + 1]->end);
    }
    const AlignmentRecord& rec = records[i];
    require_data(end <= rep.frames, rec.utterance_id, ": alignment frame ",
                 end, " past representation end (", rep.frames, " frames)");
    SegmentRep seg;
    seg.n = end - begin;
    seg.dim = static_cast<int>(rep.dim);
    seg.frames.resize(static_cast<size_t>(seg.n) * seg.dim);
    for (int t = begin; t < end; ++t) {
      const float* row = rep.values.data() + static_cast<size_t>(t) * rep.dim;
      double* dst = seg.frames.data() + static_cast<size_t>(t - begin) * seg.dim;
      double norm = 0.0;
      for (int k = 0; k < seg.dim; ++k) {
        dst[k] = row[k];
        norm += dst[k] * dst[k];
      }
      norm = std::sqrt(norm);
      require_numeric(std::isfinite(norm) && norm > 0.0, rec.utterance_id,
                      ": frame ", t, " has zero or non-finite norm");
      for (int k = 0; k < seg.dim; ++k) dst[k] /= norm;
    }
    seg.phone = rec.phone;
    seg.prev = rec.prev_phone;
    seg.next = rec.next_phone;
    seg.speaker = rec.speaker;
    seg.subset = subset;
    out.push_back(std::move(seg));
  }
  return out;
}

// ---- Distances -----------------------------------------------------------------

double angular_distance(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size() && !u.empty(),
          "angular_distance: dimension mismatch");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  const double nu = std::sqrt(uu);
  const double nv = std::sqrt(vv);
  require_numeric(std::isfinite(nu) && std::isfinite(nv) && nu > 0.0 &&
                      nv > 0.0,
                  "angular_distance: zero or non-finite vector");
  const double c = std::clamp(dot / (nu * nv), -1.0, 1.0);
  return std::acos(c) / std::numbers::pi;
}

double dtw_divergence(const SegmentRep& a, const SegmentRep& b) {
  require(a.n > 0 && b.n > 0, "dtw_divergence: empty segment");
  require(a.dim == b.dim, "dtw_divergence: dimension mismatch");
  const int m = a.n;
  const int n = b.n;
  std::vector<double> d(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      d[static_cast<size_t>(i) * n + j] = angular_distance(a.frame(i), b.frame(j));

  // The path average is sum / node count, so longer paths can win; the DP
  // therefore tracks the cheapest path of every length separately.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev;
  std::vector<double> cur(d.size(), inf);
  cur[0] = d[0];
  double best = inf;
  const int max_len = m + n - 1;
  for (int len = 1; len <= max_len; ++len) {
    if (len > 1) {
      prev = std::move(cur);
      cur.assign(d.size(), inf);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == 0 && j == 0) continue;  // paths start at (0, 0) with len 1
          double p = inf;
          if (i > 0 && j > 0) p = std::min(p, prev[static_cast<size_t>(i - 1) * n + j - 1]);
          if (i > 0) p = std::min(p, prev[static_cast<size_t>(i - 1) * n + j]);
          if (j > 0) p = std::min(p, prev[static_cast<size_t>(i) * n + j - 1]);
          if (p < inf) cur[static_cast<size_t>(i) * n + j] = p + d[static_cast<size_t>(i) * n + j];
        }
      }
    }
    const double at_end = cur[static_cast<size_t>(m - 1) * n + n - 1];
    if (at_end < inf) best = std::min(best, at_end / len);
  }
  return best;
}

// ---- Triple scoring -------------------------------------------------------------

namespace {

// A triple scores 1 when the same-phone pair is farther apart than the
// cross-phone pair, 1/2 on an exact tie.
double triple_score(double d_ax, double d_bx) {
  if (d_ax > d_bx) return 1.0;
  if (d_ax == d_bx) return 0.5;
  return 0.0;
}

}  // namespace

double abx_error(const std::vector<const SegmentRep*>& a_class,
                 const std::vector<const SegmentRep*>& b_class) {
  require(a_class.size() >= 2, "abx_error: need at least two a-class segments");
  require(!b_class.empty(), "abx_error: need at least one b-class segment");
  const int na = static_cast<int>(a_class.size());
  const int nb = static_cast<int>(b_class.size());
  std::vector<double> daa(static_cast<size_t>(na) * na, 0.0);
  for (int i = 0; i < na; ++i)
    for (int j = i + 1; j < na; ++j) {
      const double d = dtw_divergence(*a_class[i], *a_class[j]);
      daa[static_cast<size_t>(i) * na + j] = d;
      daa[static_cast<size_t>(j) * na + i] = d;
    }
  std::vector<double> dba(static_cast<size_t>(nb) * na);
  for (int k = 0; k < nb; ++k)
    for (int j = 0; j < na; ++j)
      dba[static_cast<size_t>(k) * na + j] = dtw_divergence(*b_class[k], *a_class[j]);

  double sum = 0.0;
  for (int x = 0; x < na; ++x)
    for (int a = 0; a < na; ++a) {
      if (a == x) continue;
      const double d_ax = daa[static_cast<size_t>(a) * na + x];
      for (int b = 0; b < nb; ++b)
        sum += triple_score(d_ax, dba[static_cast<size_t>(b) * na + x]);
    }
  return sum / (static_cast<double>(na) * (na - 1) * nb);
}

// ---- Conditions and the report ---------------------------------------------------

std::string Condition::name() const {
  std::string out = subset;
  out += within_speaker ? "/within-speaker" : "/across-speaker";
  out += within_context ? "/within-context" : "/any-context";
  return out;
}

std::vector<Condition> all_conditions() {
  std::vector<Condition> out;
  for (const char* subset :
       {"dev-clean", "dev-other", "test-clean", "test-other"})
    for (bool within_speaker : {true, false})
      for (bool within_context : {true, false})
        out.push_back(Condition{subset, within_speaker, within_context});
  return out;
}

ConditionFilter parse_condition_filter(const std::string& csv) {
  ConditionFilter filter;
  bool within_spk = false, across_spk = false;
  bool within_ctx = false, any_ctx = false;
  size_t pos = 0;
  while (pos <= csv.size()) {
    size_t comma = csv.find(',', pos);
    if (comma == std::string::npos) comma = csv.size();
    std::string token = csv.substr(pos, comma - pos);
    const size_t first = token.find_first_not_of(" \t");
    const size_t last = token.find_last_not_of(" \t");
    token = first == std::string::npos ? std::string()
                                       : token.substr(first, last - first + 1);
    pos = comma + 1;
    if (token.empty()) {
      require(csv.find_first_not_of(" \t,") == std::string::npos,
              "condition filter has an empty token: '", csv, "'");
      continue;
    }
    if (token == "dev-clean" || token == "dev-other" ||
        token == "test-clean" || token == "test-other") {
      filter.subsets.insert(token);
    } else if (token == "within-speaker") {
      within_spk = true;
    } else if (token == "across-speaker") {
      across_spk = true;
    } else if (token == "within-context") {
      within_ctx = true;
    } else if (token == "any-context") {
      any_ctx = true;
    } else {
      require(false, "unknown condition token '", token, "'");
    }
  }
  if (within_spk != across_spk) filter.within_speaker = within_spk;
  if (within_ctx != any_ctx) filter.within_context = within_ctx;
  return filter;
}

bool condition_selected(const Condition& condition,
                        const ConditionFilter& filter) {
  if (!filter.subsets.empty() && filter.subsets.count(condition.subset) == 0)
    return false;
  if (filter.within_speaker &&
      *filter.within_speaker != condition.within_speaker)
    return false;
  if (filter.within_context &&
      *filter.within_context != condition.within_context)
    return false;
  return true;
}

void AbxConfig::validate() const { parse_condition_filter(conditions); }

namespace {

// Caches segment-pair divergences across cells and conditions; the measure
// is symmetric, so pairs are keyed with the smaller index first.
class DistanceCache {
 public:
  explicit DistanceCache(const std::vector<SegmentRep>& segments)
      : segments_(segments) {}

  double operator()(int i, int j) {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    const uint64_t key =
        static_cast<uint64_t>(i) * segments_.size() + static_cast<uint64_t>(j);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double d = dtw_divergence(segments_[i], segments_[j]);
    cache_.emplace(key, d);
    return d;
  }

 private:
  const std::vector<SegmentRep>& segments_;
  std::unordered_map<uint64_t, double> cache_;
};

struct CellScore {
  double error = 0.0;
  int64_t triples = 0;
};

// Scores one ordered cell.  X ranges over x_idx, A over a_idx minus X, B
// over b_idx; within-speaker cells pass the same vector for a_idx and x_idx.
CellScore score_cell(const std::vector<int>& a_idx,
                     const std::vector<int>& x_idx,
                     const std::vector<int>& b_idx, DistanceCache& dist) {
  double sum = 0.0;
  int64_t count = 0;
  for (int x : x_idx) {
    for (int a : a_idx) {
      if (a == x) continue;
      const double d_ax = dist(a, x);
      for (int b : b_idx) {
        sum += triple_score(d_ax, dist(b, x));
        ++count;
      }
    }
  }
  require(count > 0, "score_cell: no scorable triple");
  return CellScore{sum / count, count};
}

ConditionResult evaluate_condition(const Condition& condition,
                                   const std::vector<SegmentRep>& segments,
                                   bool weight_by_triples,
                                   DistanceCache& dist) {
  ConditionResult result;
  result.condition = condition;

  // context -> speaker -> phone -> segment indices, in deterministic order.
  std::map<std::string,
           std::map<std::string, std::map<std::string, std::vector<int>>>>
      pool;
  for (int i = 0; i < static_cast<int>(segments.size()); ++i) {
    const SegmentRep& seg = segments[i];
    if (seg.subset != condition.subset) continue;
    const std::string ctx =
        condition.within_context ? seg.prev + kSep + seg.next : std::string();
    pool[ctx][seg.speaker][seg.phone].push_back(i);
  }

  // Mirrored ordered cells (a, b) and (b, a) share one entry here.
  std::map<std::string, std::vector<CellScore>> cells;
  double weighted_sum = 0.0;
  int64_t total_triples = 0;
  auto record = [&](const std::string& key, const CellScore& score) {
    cells[key].push_back(score);
    weighted_sum += score.error * static_cast<double>(score.triples);
    total_triples += score.triples;
  };
  auto pair_key = [](const std::string& pa, const std::string& pb) {
    return pa < pb ? pa + kSep + pb : pb + kSep + pa;
  };

  for (const auto& [ctx, speakers] : pool) {
    if (condition.within_speaker) {
      for (const auto& [speaker, phones] : speakers) {
        for (const auto& [pa, a_idx] : phones) {
          for (const auto& [pb, b_idx] : phones) {
            if (pa == pb) continue;
            if (a_idx.size() < 2) {
              ++result.skipped_cells;
              continue;
            }
            record(pair_key(pa, pb) + kSep + speaker + kSep + ctx,
                   score_cell(a_idx, a_idx, b_idx, dist));
          }
        }
      }
    } else {
      // A and B share a speaker; X takes the same phone as A from another.
      for (const auto& [spk_ab, phones_ab] : speakers) {
        for (const auto& [spk_x, phones_x] : speakers) {
          if (spk_ab == spk_x) continue;
          for (const auto& [pa, a_idx] : phones_ab) {
            for (const auto& [pb, b_idx] : phones_ab) {
              if (pa == pb) continue;
              auto x_it = phones_x.find(pa);
              if (x_it == phones_x.end()) {
                ++result.skipped_cells;
                continue;
              }
              record(pair_key(pa, pb) + kSep + spk_ab + kSep + spk_x + kSep +
                         ctx,
                     score_cell(a_idx, x_it->second, b_idx, dist));
            }
          }
        }
      }
    }
  }

  result.cells = static_cast<int64_t>(cells.size());
  result.triples = total_triples;
  if (total_triples == 0) return result;
  if (weight_by_triples) {
    result.error = weighted_sum / static_cast<double>(total_triples);
  } else {
    double sum = 0.0;
    for (const auto& [key, scores] : cells) {
      double cell = 0.0;
      for (const CellScore& s : scores) cell += s.error;
      sum += cell / static_cast<double>(scores.size());
    }
    result.error = sum / static_cast<double>(cells.size());
  }
  return result;
}

}  // namespace

std::string AbxReport::to_text() const {
  std::ostringstream os;
  for (const ConditionResult& r : conditions) {
    os << r.condition.name() << " = ";
    if (r.triples > 0) {
      os << fmt4(r.error) << "  (cells " << r.cells << ", triples "
         << r.triples << ")";
    } else {
      os << "n/a  (no scorable triple)";
    }
    os << "\n";
  }
  os << "mean = " << fmt4(mean) << "  (over " << scored_conditions << " of "
     << conditions.size() << " conditions)\n";
  return os.str();
}

AbxReport evaluate_abx(const std::vector<SegmentRep>& segments,
                       const AbxConfig& cfg) {
  cfg.validate();
  const ConditionFilter filter = parse_condition_filter(cfg.conditions);
  DistanceCache dist(segments);
  AbxReport report;
  double sum = 0.0;
  for (const Condition& condition : all_conditions()) {
    if (!condition_selected(condition, filter)) continue;
    ConditionResult r =
        evaluate_condition(condition, segments, cfg.weight_by_triples, dist);
    if (r.triples > 0) {
      sum += r.error;
      ++report.scored_conditions;
    }
    report.conditions.push_back(std::move(r));
  }
  require_data(report.scored_conditions > 0,
               "ABX evaluation produced no triples in any selected condition");
  report.mean = sum / static_cast<double>(report.scored_conditions);
  return report;
}

}  // namespace ctxpre
