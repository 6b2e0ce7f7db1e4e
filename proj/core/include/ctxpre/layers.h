// core/include/ctxpre/layers.h

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

#ifndef CTXPRE_LAYERS_H_
#define CTXPRE_LAYERS_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctxpre/rng.h"
#include "ctxpre/tensor.h"

namespace ctxpre {

// Named handle to a module parameter; the pointer stays valid for the
// lifetime of the owning module and can be re-seated for substitution.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* tensor;
};

// ---- Strided convolutional encoder ---------------------------------------

struct EncoderConfig {
  std::vector<int> kernels = {10, 8, 4, 4, 4};
  std::vector<int> strides = {5, 4, 2, 2, 2};
  int channels = 256;
  // Channel-wise layer normalization between convolution and activation.
  bool layer_norm_between = false;

  void validate() const;
};

// Product of all strides: samples per output frame (160 by default).
int encoder_total_stride(const EncoderConfig& cfg);
// Number of input samples one output frame depends on (465 by default):
// 1 + sum_i (k_i - 1) * prod_{j<i} s_j.
int encoder_receptive_field(const EncoderConfig& cfg);
// Output frame count for t1 input samples.  Each layer left-pads k - s zero
// frames so layer lengths compose as floor division: the result is
// floor(t1 / total_stride).  Requires at least total_stride samples.
int encoder_output_length(const EncoderConfig& cfg, int64_t t1);

template <typename T>
class ConvEncoder {
 public:
  ConvEncoder(const EncoderConfig& cfg, const Rng& rng);

  // audio: {t1, 1} -> latents {floor(t1 / total_stride), channels}.
  Tensor<T> forward(const Tensor<T>& audio) const;

  std::vector<ParamRef<T>> parameters();
  void set_trainable(bool trainable);
  ConvEncoder clone() const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  ConvEncoder() = default;
  EncoderConfig cfg_;
  std::vector<Tensor<T>> weights_;  // {k, c_in, c_out} per layer
  std::vector<Tensor<T>> biases_;   // {c_out} per layer
  std::vector<Tensor<T>> ln_gain_, ln_bias_;  // when layer_norm_between
};

// Wraps mono samples as a {t1, 1} leaf.
template <typename T>
Tensor<T> audio_to_tensor(std::span<const float> samples);

// ---- Windowed causal self-attention ---------------------------------------

// width semantics: 0 means unbounded (every query attends to all frames up to
// and including itself); width >= 1 restricts query t to frames
// [t - width + 1, t].  A width >= t yields exactly the unbounded mask, so the
// two configurations are bit-identical through the shared kernel.
constexpr int kUnboundedWidth = 0;

struct AttentionConfig {
  int model_dim = 256;
  int heads = 8;
  int width = 4;

  void validate() const;
};

// Byte mask of shape {t, t} (row-major); entry (i, j) is 1 iff query i may
// attend to key j.
std::vector<uint8_t> attention_window_mask(int t, int width);

template <typename T>
class SelfAttention {
 public:
  SelfAttention(const AttentionConfig& cfg, const Rng& rng);

  // x: {t, model_dim}; mask: attention_window_mask(t, w).
  Tensor<T> forward(const Tensor<T>& x, const std::vector<uint8_t>& mask) const;

  std::vector<ParamRef<T>> parameters();
  void set_trainable(bool trainable);
  SelfAttention clone() const;

  const AttentionConfig& config() const { return cfg_; }

 private:
  template <typename>
  friend class TransformerLayer;
  SelfAttention() = default;
  AttentionConfig cfg_;
  Tensor<T> wq_, wk_, wv_, wo_;
  Tensor<T> bq_, bk_, bv_, bo_;
};

// ---- Transformer layer ------------------------------------------------------

struct TransformerLayerConfig {
  AttentionConfig attention;
  int ff_hidden = 1024;
  // Output width of the feed-forward block; 0 means model_dim.  When it
  // differs from model_dim the feed-forward output is returned directly
  // (no second residual connection or normalization).
  int out_dim = 0;

  int effective_out_dim() const {
    return out_dim == 0 ? attention.model_dim : out_dim;
  }
  void validate() const;
};

template <typename T>
class TransformerLayer {
 public:
  TransformerLayer(const TransformerLayerConfig& cfg, const Rng& rng);

  Tensor<T> forward(const Tensor<T>& x, const std::vector<uint8_t>& mask) const;

  std::vector<ParamRef<T>> parameters();
  void set_trainable(bool trainable);
  TransformerLayer clone() const;

  const TransformerLayerConfig& config() const { return cfg_; }

 private:
  template <typename>
  friend class PredictorNetwork;  // its clone() default-constructs a layer
  TransformerLayer() = default;
  TransformerLayerConfig cfg_;
  SelfAttention<T> attn_;
  Tensor<T> ln1_gain_, ln1_bias_;
  Tensor<T> ff_w1_, ff_b1_, ff_w2_, ff_b2_;
  Tensor<T> ln2_gain_, ln2_bias_;  // only when out_dim == model_dim
};

// ---- Autoregressive context network -----------------------------------------

struct ArConfig {
  int layers = 1;
  TransformerLayerConfig layer;
  // Width of the final affine map producing the context representation.
  int final_dim = 256;
  // Add fixed sinusoidal position encodings to the input.
  bool positional_encoding = true;

  void validate() const;
};

// Frames of causal context available at the output of d stacked layers of
// width w: d * (w - 1) + 1.  Returns kUnboundedWidth for unbounded layers.
int total_context(int layers, int width);

// Fixed sinusoidal table {t, dim}: column 2i holds sin(t / 10000^(2i/dim)),
// column 2i+1 the matching cosine.  dim must be even.
template <typename T>
Tensor<T> sinusoidal_positions(int t, int dim);

template <typename T>
class ArNetwork {
 public:
  ArNetwork(const ArConfig& cfg, const Rng& rng);

  struct Output {
    Tensor<T> hidden;   // last transformer layer output, {t, model_dim}
    Tensor<T> context;  // final affine output, {t, final_dim}
  };

  // z: {t, model_dim}.
  Output forward_with_hidden(const Tensor<T>& z) const;
  Tensor<T> forward(const Tensor<T>& z) const;

  std::vector<ParamRef<T>> parameters();
  void set_trainable(bool trainable);
  ArNetwork clone() const;
  // Changes the attention window of every layer (used for width sweeps and
  // the bounded-vs-unbounded equivalence check).
  void set_attention_width(int width);

  const ArConfig& config() const { return cfg_; }

 private:
  ArNetwork() = default;
  ArConfig cfg_;
  std::vector<TransformerLayer<T>> layers_;
  Tensor<T> final_w_, final_b_;
};

}  // namespace ctxpre

#endif  // CTXPRE_LAYERS_H_
