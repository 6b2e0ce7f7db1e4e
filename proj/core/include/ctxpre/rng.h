// core/include/ctxpre/rng.h

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

#ifndef CTXPRE_RNG_H_
#define CTXPRE_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace ctxpre {

// Deterministic random stream.  Every consumer of randomness derives its own
// child stream from a root seed via string or integer labels, so the values a
// consumer sees do not depend on what other consumers drew.  All sampling is
// implemented on top of the raw 64-bit output (never std::*_distribution), so
// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Derives an independent stream; derivation depends only on this stream's
  // seed and the label, not on how much has been drawn.
  Rng child(std::string_view label) const;
  Rng child(uint64_t index) const;

  uint64_t seed() const { return seed_; }

  uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer on [0, n); unbiased via rejection.  Requires n > 0.
  int64_t uniform_int(int64_t n);
  // Standard normal via the Box-Muller transform (one value per call).
  double normal();

  template <typename T>
  void fill_normal(std::span<T> out, double stddev) {
    for (auto& v : out) v = static_cast<T>(normal() * stddev);
  }
  template <typename T>
  void fill_uniform(std::span<T> out, double lo, double hi) {
    for (auto& v : out) v = static_cast<T>(uniform(lo, hi));
  }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

// SplitMix64 output function; used for seed mixing.
uint64_t splitmix64(uint64_t x);

// FNV-1a hash of a byte string; used to fold labels into seeds.
uint64_t fnv1a64(std::string_view s);

}  // namespace ctxpre

#endif  // CTXPRE_RNG_H_
