// core/include/ctxpre/reference.h

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

#ifndef CTXPRE_REFERENCE_H_
#define CTXPRE_REFERENCE_H_

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

// Slow, obviously-correct reference implementations.  These never share code
// with the production kernels; tests and the self-check command compare the
// two routes against each other.

namespace ctxpre {
namespace reference {

// Direct sliding-window convolution.
//   x: t_in x c_in (row-major), w: {k, c_in, c_out} (tap-major),
//   bias: c_out or empty.  Left-side zero padding only.
std::vector<double> naive_conv1d(std::span<const double> x, int t_in, int c_in,
                                 std::span<const double> w, int k, int c_out,
                                 std::span<const double> bias, int stride,
                                 int left_pad, int* t_out);

// Direct O(n^2) discrete Fourier transform.
std::vector<std::complex<double>> naive_dft(std::span<const double> x);

// Exhaustive enumeration of every monotone alignment path from (0,0) to
// (m-1,n-1) with diagonal/right/down moves over a frame-distance matrix
// d (m x n, row-major); returns the minimum over paths of the summed
// distance divided by the number of path nodes.  Cost grows exponentially;
// only usable for small m, n.
double dtw_min_ratio_enumerate(std::span<const double> d, int m, int n);

// Index of the nearest prototype (Euclidean) to z after normalizing z to
// unit length; ties resolve to the lowest index.  prototypes: size x dim.
int naive_nearest_prototype(std::span<const float> z,
                            std::span<const float> prototypes, int size,
                            int dim);

}  // namespace reference
}  // namespace ctxpre

#endif  // CTXPRE_REFERENCE_H_
