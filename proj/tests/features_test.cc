// tests/features_test.cc

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

#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>
#include <vector>

#include "ctxpre/common.h"
#include "ctxpre/fft.h"
#include "ctxpre/reference.h"
#include "ctxpre/rng.h"

using namespace ctxpre;

TEST_SUITE("features") {

TEST_CASE("radix-2 fft matches the direct dft") {
  Rng rng(41);
  for (int n : {1, 2, 8, 64, 512}) {
    std::vector<double> x(n);
    rng.fill_normal(std::span<double>(x), 1.0);
    std::vector<std::complex<double>> fast(n);
    for (int i = 0; i < n; ++i) fast[i] = {x[i], 0.0};
    fft_radix2(fast);
    auto slow = reference::naive_dft(x);
    for (int k = 0; k < n; ++k) {
      CHECK(fast[k].real() == doctest::Approx(slow[k].real()).epsilon(1e-9));
      CHECK(fast[k].imag() == doctest::Approx(slow[k].imag()).epsilon(1e-9));
    }
  }
}

TEST_CASE("fft of an impulse is flat and of a shifted impulse a twiddle") {
  std::vector<std::complex<double>> x(8, {0.0, 0.0});
  x[0] = {1.0, 0.0};
  fft_radix2(x);
  for (const auto& v : x) {
    CHECK(v.real() == doctest::Approx(1.0));
    CHECK(v.imag() == doctest::Approx(0.0));
  }
  std::vector<std::complex<double>> y(8, {0.0, 0.0});
  y[1] = {1.0, 0.0};
  fft_radix2(y);
  for (int k = 0; k < 8; ++k) {
    const double ang = -2.0 * std::numbers::pi * k / 8.0;
    CHECK(y[k].real() == doctest::Approx(std::cos(ang)));
    CHECK(y[k].imag() == doctest::Approx(std::sin(ang)));
  }
}

TEST_CASE("fft rejects non-power-of-two sizes") {
  std::vector<std::complex<double>> x(12, {0.0, 0.0});
  CHECK_THROWS_AS(fft_radix2(x), std::invalid_argument);
}

TEST_CASE("mel scale converts both ways") {
  for (double hz : {0.0, 125.0, 1000.0, 7999.0}) {
    CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-10));
  }
  CHECK(hz_to_mel(1000.0) == doctest::Approx(999.9855).epsilon(1e-4));
}

TEST_CASE("feature config geometry at the defaults") {
  FeatureConfig cfg;
  CHECK(cfg.window_samples() == 400);
  CHECK(cfg.hop_samples() == 160);
  CHECK(cfg.fft_size() == 512);
  cfg.validate();
  cfg.fmax_hz = 9000.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("mel filterbank rows are triangular with increasing centers") {
  FeatureConfig cfg;
  auto bank = mel_filterbank(cfg);
  const int bins = cfg.fft_size() / 2 + 1;
  REQUIRE(static_cast<int>(bank.size()) == cfg.n_mels * bins);
  double prev_center = -1.0;
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double center = mel_filter_center_hz(cfg, m);
    CHECK(center > prev_center);
    prev_center = center;
    // Support is one contiguous run of positive weights, all <= 1.
    int first = -1, last = -1;
    for (int k = 0; k < bins; ++k) {
      const double w = bank[static_cast<size_t>(m) * bins + k];
      CHECK(w >= 0.0);
      CHECK(w <= 1.0 + 1e-12);
      if (w > 0.0) {
        if (first < 0) first = k;
        last = k;
      }
    }
    REQUIRE(first >= 0);
    for (int k = first; k <= last; ++k)
      CHECK(bank[static_cast<size_t>(m) * bins + k] > 0.0);
  }
}

TEST_CASE("log mel frame counts sit on the hop grid") {
  FeatureConfig cfg;
  std::vector<float> one_second(16000, 0.01f);
  int frames = 0;
  auto feats = log_mel(one_second, cfg, &frames);
  CHECK(frames == 100);
  CHECK(feats.size() == static_cast<size_t>(100) * 80);
  CHECK(log_mel_frames(15999, cfg) == 99);
  CHECK(log_mel_frames(16160, cfg) == 101);
  CHECK(log_mel_frames(400, cfg) == 2);
  std::vector<float> too_short(399, 0.0f);
  CHECK_THROWS_AS(log_mel(too_short, cfg, nullptr), DataError);
}

TEST_CASE("log mel of silence is the log floor everywhere") {
  FeatureConfig cfg;
  std::vector<float> silence(8000, 0.0f);
  auto feats = log_mel(silence, cfg, nullptr);
  const float floor_db = std::log(1e-10f);
  for (float v : feats) CHECK(v == doctest::Approx(floor_db));
}

TEST_CASE("log mel of white noise stays above the floor in every band") {
  FeatureConfig cfg;
  Rng rng(42);
  std::vector<float> noise(16000);
  for (auto& v : noise) v = static_cast<float>(0.1 * rng.normal());
  auto feats = log_mel(noise, cfg, nullptr);
  for (float v : feats) {
    CHECK(std::isfinite(v));
    CHECK(v > std::log(1e-10) + 1.0);
  }
}

TEST_CASE("a pure 1 kHz tone peaks in the filter that owns 1 kHz") {
  FeatureConfig cfg;
  std::vector<float> tone(16000);
  for (int n = 0; n < 16000; ++n) {
    tone[n] = static_cast<float>(
        0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * n / 16000.0));
  }
  int frames = 0;
  auto feats = log_mel(tone, cfg, &frames);
  std::vector<double> avg(cfg.n_mels, 0.0);
  for (int f = 0; f < frames; ++f)
    for (int m = 0; m < cfg.n_mels; ++m)
      avg[m] += feats[static_cast<size_t>(f) * cfg.n_mels + m];
  int got = 0;
  for (int m = 1; m < cfg.n_mels; ++m)
    if (avg[m] > avg[got]) got = m;

  // Independent oracle: evaluate each triangle at 1 kHz straight from the
  // published Mel formula and take the strongest filter.
  const double mel_lo = 2595.0 * std::log10(1.0 + cfg.fmin_hz / 700.0);
  const double mel_hi = 2595.0 * std::log10(1.0 + cfg.fmax_hz / 700.0);
  auto edge_hz = [&](int i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1);
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  };
  int want = -1;
  double best_w = -1.0;
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double l = edge_hz(m), c = edge_hz(m + 1), r = edge_hz(m + 2);
    double w = 0.0;
    if (1000.0 > l && 1000.0 <= c) w = (1000.0 - l) / (c - l);
    if (1000.0 > c && 1000.0 < r) w = (r - 1000.0) / (r - c);
    if (w > best_w) {
      best_w = w;
      want = m;
    }
  }
  CHECK(got == want);
}

TEST_CASE("each log mel frame equals a direct dft computation") {
  FeatureConfig cfg;
  Rng rng(43);
  std::vector<float> audio(16000);
  for (auto& v : audio) v = static_cast<float>(0.2 * rng.normal());
  int frames = 0;
  auto feats = log_mel(audio, cfg, &frames);
  REQUIRE(frames == 100);

  auto bank = mel_filterbank(cfg);
  const int bins = cfg.fft_size() / 2 + 1;
  const int win = cfg.window_samples();
  // Frame 99 starts at sample 15840 and runs past the end of the signal,
  // so this also pins the zero-padded tail policy.
  for (int f : {0, 50, 99}) {
    std::vector<double> windowed(cfg.fft_size(), 0.0);
    for (int i = 0; i < win; ++i) {
      const int s = f * cfg.hop_samples() + i;
      const double hann =
          0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
      windowed[i] = s < 16000 ? audio[s] * hann : 0.0;
    }
    auto spectrum = reference::naive_dft(windowed);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      for (int k = 0; k < bins; ++k)
        e += bank[static_cast<size_t>(m) * bins + k] * std::abs(spectrum[k]);
      const double want = std::log(std::max(e, 1e-10));
      CHECK(feats[static_cast<size_t>(f) * cfg.n_mels + m] ==
            doctest::Approx(want).epsilon(1e-5));
    }
  }
}

TEST_CASE("log mel is deterministic") {
  FeatureConfig cfg;
  Rng rng(44);
  std::vector<float> audio(4800);
  for (auto& v : audio) v = static_cast<float>(0.3 * rng.normal());
  auto a = log_mel(audio, cfg, nullptr);
  auto b = log_mel(audio, cfg, nullptr);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

}  // TEST_SUITE("features")
