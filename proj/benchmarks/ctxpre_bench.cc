// benchmarks/ctxpre_bench.cc

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

// Micro-benchmarks for the hot paths: the strided encoder, windowed
// attention across widths, the contrastive loss with its backward pass,
// segment alignment, quantization, and the featurizer.  Inputs are sized
// like one second of 16 kHz audio (100 latent frames) so numbers map
// directly onto training throughput.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "ctxpre/abx.h"
#include "ctxpre/fft.h"
#include "ctxpre/layers.h"
#include "ctxpre/objectives.h"
#include "ctxpre/rng.h"
#include "ctxpre/tensor.h"

namespace {

using ctxpre::Rng;
using ctxpre::Tensor;

// One second of stock-rate audio through the default strided encoder.
void BM_EncoderForward(benchmark::State& state) {
  const int samples = static_cast<int>(state.range(0));
  ctxpre::EncoderConfig cfg;
  Rng rng(11);
  ctxpre::ConvEncoder<float> enc(cfg, rng);
  enc.set_trainable(false);
  std::vector<float> audio(samples);
  for (int i = 0; i < samples; ++i) audio[i] = 1e-3f * static_cast<float>(i % 97);
  for (auto _ : state) {
    Tensor<float> z = enc.forward(ctxpre::audio_to_tensor<float>(audio));
    benchmark::DoNotOptimize(z.value().data());
  }
  state.SetItemsProcessed(state.iterations() *
                          ctxpre::encoder_output_length(cfg, samples));
}
BENCHMARK(BM_EncoderForward)->Arg(16000)->Arg(48000)->Unit(benchmark::kMillisecond);

// Context network forward at 100 frames across attention widths; width 0 is
// unbounded, so the sweep shows what narrowing the window actually buys.
void BM_AttentionWidth(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  ctxpre::ArConfig cfg;
  cfg.layers = 2;
  cfg.layer.attention.model_dim = 256;
  cfg.layer.attention.heads = 8;
  cfg.layer.attention.width = width;
  cfg.layer.ff_hidden = 512;
  cfg.final_dim = 256;
  Rng rng(12);
  ctxpre::ArNetwork<float> ar(cfg, rng);
  ar.set_trainable(false);
  Rng data(13);
  const Tensor<float> z = ctxpre::randn_tensor<float>({100, 256}, data);
  for (auto _ : state) {
    Tensor<float> c = ar.forward(z);
    benchmark::DoNotOptimize(c.value().data());
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_AttentionWidth)->Arg(2)->Arg(8)->Arg(32)->Arg(ctxpre::kUnboundedWidth)
    ->Unit(benchmark::kMillisecond);

// Contrastive loss over a four-utterance batch, forward and backward, sized
// like one training step of the stock model.
void BM_CpcLossBackward(benchmark::State& state) {
  ctxpre::CpcConfig cfg;
  cfg.steps = 12;
  cfg.negatives = 128;
  Rng data(14);
  std::vector<ctxpre::CpcItem<float>> items(4);
  for (ctxpre::CpcItem<float>& item : items) {
    item.z = ctxpre::randn_tensor<float>({100, 256}, data);
    item.z.set_requires_grad(true);
    for (int s = 0; s < cfg.steps; ++s) {
      item.v.push_back(ctxpre::randn_tensor<float>({100, 256}, data));
      item.v.back().set_requires_grad(true);
    }
  }
  for (auto _ : state) {
    Rng draw(15);
    Tensor<float> loss = ctxpre::cpc_loss(items, cfg, draw);
    ctxpre::backward(loss);
    benchmark::DoNotOptimize(loss.scalar());
  }
}
BENCHMARK(BM_CpcLossBackward)->Unit(benchmark::kMillisecond);

// Alignment divergence between two phone segments of equal length.
void BM_DtwDivergence(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int dim = 256;
  Rng rng(16);
  auto segment = [&] {
    ctxpre::SegmentRep s;
    s.n = n;
    s.dim = dim;
    Tensor<double> r = ctxpre::randn_tensor<double>({n, dim}, rng);
    s.frames.assign(r.value().begin(), r.value().end());
    for (int i = 0; i < n; ++i) {
      double norm = 0.0;
      for (int d = 0; d < dim; ++d) norm += s.frames[i * dim + d] * s.frames[i * dim + d];
      norm = std::sqrt(norm);
      for (int d = 0; d < dim; ++d) s.frames[i * dim + d] /= norm;
    }
    return s;
  };
  const ctxpre::SegmentRep a = segment();
  const ctxpre::SegmentRep b = segment();
  for (auto _ : state) benchmark::DoNotOptimize(ctxpre::dtw_divergence(a, b));
}
BENCHMARK(BM_DtwDivergence)->Arg(8)->Arg(16)->Arg(32);

// Nearest-prototype lookup against the stock 8192-entry codebook.
void BM_Quantize(benchmark::State& state) {
  const ctxpre::Codebook book = ctxpre::Codebook::make(8192, 80, 17);
  Rng rng(18);
  const Tensor<float> frames = ctxpre::randn_tensor<float>({64, 80}, rng);
  for (auto _ : state) {
    int sum = 0;
    for (int i = 0; i < 64; ++i)
      sum += book.quantize(std::span<const float>(frames.data() + i * 80, 80));
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_Quantize);

// Log-Mel featurization of one second of audio at the stock configuration.
void BM_LogMel(benchmark::State& state) {
  ctxpre::FeatureConfig cfg;
  std::vector<float> audio(16000);
  for (size_t i = 0; i < audio.size(); ++i)
    audio[i] = 0.1f * static_cast<float>((i % 167) - 83) / 83.0f;
  for (auto _ : state) {
    std::vector<float> mel = ctxpre::log_mel(audio, cfg);
    benchmark::DoNotOptimize(mel.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          ctxpre::log_mel_frames(16000, cfg));
}
BENCHMARK(BM_LogMel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
