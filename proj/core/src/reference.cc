// core/src/reference.cc

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

#include "ctxpre/reference.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "ctxpre/common.h"

namespace ctxpre {
namespace reference {

std::vector<double> naive_conv1d(std::span<const double> x, int t_in, int c_in,
                                 std::span<const double> w, int k, int c_out,
                                 std::span<const double> bias, int stride,
                                 int left_pad, int* t_out) {
  require(static_cast<int64_t>(x.size()) == int64_t(t_in) * c_in,
          "naive_conv1d: bad x size");
  require(static_cast<int64_t>(w.size()) == int64_t(k) * c_in * c_out,
          "naive_conv1d: bad w size");
  const int steps = (t_in + left_pad - k) / stride + 1;
  require(steps >= 1, "naive_conv1d: input too short");
  *t_out = steps;
  std::vector<double> out(static_cast<size_t>(steps) * c_out, 0.0);
  for (int t = 0; t < steps; ++t) {
    for (int co = 0; co < c_out; ++co) {
      double acc = bias.empty() ? 0.0 : bias[co];
      for (int tap = 0; tap < k; ++tap) {
        const int r = t * stride + tap - left_pad;
        if (r < 0 || r >= t_in) continue;  // zero padding
        for (int ci = 0; ci < c_in; ++ci)
          acc += x[static_cast<size_t>(r) * c_in + ci] *
                 w[(static_cast<size_t>(tap) * c_in + ci) * c_out + co];
      }
      out[static_cast<size_t>(t) * c_out + co] = acc;
    }
  }
  return out;
}

std::vector<std::complex<double>> naive_dft(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t t = 0; t < n; ++t) {
      const double angle =
          -2.0 * std::numbers::pi * static_cast<double>(k * t % n) /
          static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

namespace {

// Depth-first walk over all monotone paths, tracking summed distance and
// node count.
void enumerate_paths(const double* d, int m, int n, int i, int j, double acc,
                     int nodes, double* best) {
  acc += d[static_cast<size_t>(i) * n + j];
  ++nodes;
  if (i == m - 1 && j == n - 1) {
    const double ratio = acc / nodes;
    if (ratio < *best) *best = ratio;
    return;
  }
  if (i + 1 < m && j + 1 < n)
    enumerate_paths(d, m, n, i + 1, j + 1, acc, nodes, best);
  if (j + 1 < n) enumerate_paths(d, m, n, i, j + 1, acc, nodes, best);
  if (i + 1 < m) enumerate_paths(d, m, n, i + 1, j, acc, nodes, best);
}

}  // namespace

double dtw_min_ratio_enumerate(std::span<const double> d, int m, int n) {
  require(m >= 1 && n >= 1, "dtw_min_ratio_enumerate: empty inputs");
  require(static_cast<int64_t>(d.size()) == int64_t(m) * n,
          "dtw_min_ratio_enumerate: bad matrix size");
  double best = std::numeric_limits<double>::infinity();
  enumerate_paths(d.data(), m, n, 0, 0, 0.0, 0, &best);
  return best;
}

int naive_nearest_prototype(std::span<const float> z,
                            std::span<const float> prototypes, int size,
                            int dim) {
  require(static_cast<int>(z.size()) == dim, "naive_nearest_prototype: bad z");
  require(static_cast<int64_t>(prototypes.size()) == int64_t(size) * dim,
          "naive_nearest_prototype: bad prototypes");
  double norm = 0.0;
  for (float v : z) norm += static_cast<double>(v) * v;
  norm = std::sqrt(norm);
  require(norm > 0.0, "naive_nearest_prototype: zero vector");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size; ++i) {
    double dist = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double diff =
          static_cast<double>(z[c]) / norm -
          static_cast<double>(prototypes[static_cast<size_t>(i) * dim + c]);
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

}  // namespace reference
}  // namespace ctxpre
