// core/include/ctxpre/fft.h

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

#ifndef CTXPRE_FFT_H_
#define CTXPRE_FFT_H_

#include <complex>
#include <span>
#include <vector>

namespace ctxpre {

// In-place iterative radix-2 FFT.  The size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& x);

// Mel scale: mel(f) = 2595 log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct FeatureConfig {
  int n_mels = 80;
  double window_s = 0.025;
  double hop_s = 0.010;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  int sample_rate = 16000;

  int window_samples() const;  // 400 at the defaults
  int hop_samples() const;     // 160 at the defaults
  int fft_size() const;        // smallest power of two >= window, 512
  void validate() const;       // throws std::invalid_argument
};

// Triangular Mel filterbank, n_mels rows by (fft_size/2 + 1) columns,
// row-major.  Filter m rises over (edge[m], edge[m+1]) and falls over
// (edge[m+1], edge[m+2]) where the n_mels + 2 edges are equally spaced on
// the Mel scale between fmin and fmax.
std::vector<double> mel_filterbank(const FeatureConfig& cfg);

// Peak frequency of filter m in Hz (the middle edge above).
double mel_filter_center_hz(const FeatureConfig& cfg, int m);

// Log-Mel features.  Frame f covers samples [f * hop, f * hop + window),
// zero-padded past the end of the signal, so the frame count is
// floor(n / hop) and the frames land on the same 10 ms grid as the conv
// encoder output.  Each frame is Hann-windowed, the magnitude spectrum is
// warped through the filterbank, and the band energies pass through
// log(max(e, 1e-10)).  Output is row-major frames x n_mels.
// Throws DataError if the signal is shorter than one window.
std::vector<float> log_mel(std::span<const float> samples,
                           const FeatureConfig& cfg, int* frames_out);

// Frame count log_mel produces for a signal of n samples.
int log_mel_frames(int n_samples, const FeatureConfig& cfg);

}  // namespace ctxpre

#endif  // CTXPRE_FFT_H_
