// core/src/fft.cc

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

#include "ctxpre/fft.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ctxpre/common.h"

namespace ctxpre {

namespace {

constexpr double kLogFloor = 1e-10;

bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void fft_radix2(std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("fft_radix2: size must be a power of two, got " +
                                std::to_string(n));
  }
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

int FeatureConfig::window_samples() const {
  return static_cast<int>(std::lround(window_s * sample_rate));
}

int FeatureConfig::hop_samples() const {
  return static_cast<int>(std::lround(hop_s * sample_rate));
}

int FeatureConfig::fft_size() const {
  int n = 1;
  while (n < window_samples()) n <<= 1;
  return n;
}

void FeatureConfig::validate() const {
  if (n_mels <= 0) throw std::invalid_argument("n_mels must be positive");
  if (sample_rate <= 0)
    throw std::invalid_argument("sample_rate must be positive");
  if (window_samples() <= 0 || hop_samples() <= 0)
    throw std::invalid_argument("window and hop must span at least one sample");
  if (hop_samples() > window_samples())
    throw std::invalid_argument("hop must not exceed the window");
  if (!(fmin_hz >= 0.0) || !(fmax_hz > fmin_hz) ||
      fmax_hz > sample_rate / 2.0 + 1e-9) {
    throw std::invalid_argument(
        "need 0 <= fmin < fmax <= Nyquist, got fmin=" + std::to_string(fmin_hz) +
        " fmax=" + std::to_string(fmax_hz));
  }
}

std::vector<double> mel_filterbank(const FeatureConfig& cfg) {
  cfg.validate();
  const int bins = cfg.fft_size() / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(cfg.fmax_hz);
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    edges[i] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));
  }
  std::vector<double> bank(static_cast<size_t>(cfg.n_mels) * bins, 0.0);
  const double hz_per_bin =
      static_cast<double>(cfg.sample_rate) / cfg.fft_size();
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = k * hz_per_bin;
      double w = 0.0;
      if (f > left && f < center) {
        w = (f - left) / (center - left);
      } else if (f == center) {
        w = 1.0;
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      bank[static_cast<size_t>(m) * bins + k] = w;
    }
  }
  return bank;
}

double mel_filter_center_hz(const FeatureConfig& cfg, int m) {
  require(m >= 0 && m < cfg.n_mels, "mel_filter_center_hz: bad filter index ",
          m);
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(cfg.fmax_hz);
  return mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) / (cfg.n_mels + 1));
}

int log_mel_frames(int n_samples, const FeatureConfig& cfg) {
  require_data(n_samples >= cfg.window_samples(),
               "log_mel: need at least one window (",
               cfg.window_samples(), " samples), got ", n_samples);
  return n_samples / cfg.hop_samples();
}

std::vector<float> log_mel(std::span<const float> samples,
                           const FeatureConfig& cfg, int* frames_out) {
  cfg.validate();
  const int frames = log_mel_frames(static_cast<int>(samples.size()), cfg);
  const int win = cfg.window_samples();
  const int hop = cfg.hop_samples();
  const int nfft = cfg.fft_size();
  const int bins = nfft / 2 + 1;

  std::vector<double> hann(win);
  for (int i = 0; i < win; ++i) {
    hann[i] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
  }
  const std::vector<double> bank = mel_filterbank(cfg);

  std::vector<float> out(static_cast<size_t>(frames) * cfg.n_mels);
  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> mag(bins);
  for (int f = 0; f < frames; ++f) {
    const int start = f * hop;
    for (int i = 0; i < nfft; ++i) {
      const int s = start + i;
      const double v =
          (i < win && s < static_cast<int>(samples.size()))
              ? samples[s] * hann[i]
              : 0.0;
      buf[i] = {v, 0.0};
    }
    fft_radix2(buf);
    for (int k = 0; k < bins; ++k) mag[k] = std::abs(buf[k]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      const double* row = bank.data() + static_cast<size_t>(m) * bins;
      for (int k = 0; k < bins; ++k) e += row[k] * mag[k];
      out[static_cast<size_t>(f) * cfg.n_mels + m] =
          static_cast<float>(std::log(std::max(e, kLogFloor)));
    }
  }
  if (frames_out != nullptr) *frames_out = frames;
  return out;
}

}  // namespace ctxpre
