// core/src/layers.cc

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

#include "ctxpre/layers.h"

#include <cmath>

namespace ctxpre {

namespace {

constexpr double kLayerNormEps = 1e-5;

// Parameter initialization: weight matrices draw from N(0, 1/fan_in);
// biases start at zero; normalization affine starts at identity.  Every
// parameter derives its stream from its own name, so values do not depend on
// construction order.
template <typename T>
Tensor<T> init_weight(Shape shape, int fan_in, const Rng& rng,
                      const std::string& name) {
  Rng stream = rng.child(name);
  auto t = randn_tensor<T>(std::move(shape), stream,
                           1.0 / std::sqrt(static_cast<double>(fan_in)));
  t.set_requires_grad(true);
  return t;
}

template <typename T>
Tensor<T> init_const(Shape shape, T value) {
  auto t = Tensor<T>::full(std::move(shape), value);
  t.set_requires_grad(true);
  return t;
}

template <typename T>
Tensor<T> clone_param(const Tensor<T>& p) {
  auto t = p.detach();
  t.set_requires_grad(p.requires_grad());
  return t;
}

}  // namespace

// ---- Encoder ---------------------------------------------------------------

void EncoderConfig::validate() const {
  require(!kernels.empty(), "encoder: needs at least one layer");
  require(kernels.size() == strides.size(),
          "encoder: kernels and strides must have equal length");
  require(channels >= 1, "encoder: channels must be >= 1");
  for (size_t i = 0; i < kernels.size(); ++i) {
    require(strides[i] >= 1, "encoder: strides must be >= 1");
    require(kernels[i] >= strides[i],
            "encoder: kernel must be >= stride so frames tile the input");
  }
}

int encoder_total_stride(const EncoderConfig& cfg) {
  cfg.validate();
  int prod = 1;
  for (int s : cfg.strides) prod *= s;
  return prod;
}

int encoder_receptive_field(const EncoderConfig& cfg) {
  cfg.validate();
  int rf = 1;
  int jump = 1;
  for (size_t i = 0; i < cfg.kernels.size(); ++i) {
    rf += (cfg.kernels[i] - 1) * jump;
    jump *= cfg.strides[i];
  }
  return rf;
}

int encoder_output_length(const EncoderConfig& cfg, int64_t t1) {
  const int hop = encoder_total_stride(cfg);
  require(t1 >= hop, "encoder: input of ", t1,
          " samples is shorter than one frame (", hop, " samples)");
  // Left padding of k - s per layer makes each layer map t -> floor(t / s),
  // and floor division composes across layers.
  return static_cast<int>(t1 / hop);
}

template <typename T>
ConvEncoder<T>::ConvEncoder(const EncoderConfig& cfg, const Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  int c_in = 1;
  for (size_t i = 0; i < cfg_.kernels.size(); ++i) {
    const int k = cfg_.kernels[i];
    const int c_out = cfg_.channels;
    const std::string tag = "enc" + std::to_string(i);
    weights_.push_back(
        init_weight<T>({k, c_in, c_out}, k * c_in, rng, tag + ".w"));
    biases_.push_back(init_const<T>({c_out}, T(0)));
    if (cfg_.layer_norm_between) {
      ln_gain_.push_back(init_const<T>({c_out}, T(1)));
      ln_bias_.push_back(init_const<T>({c_out}, T(0)));
    }
    c_in = c_out;
  }
}

template <typename T>
Tensor<T> ConvEncoder<T>::forward(const Tensor<T>& audio) const {
  require(audio.rank() == 2 && audio.dim(1) == 1,
          "encoder: audio must have shape {t1, 1}");
  encoder_output_length(cfg_, audio.dim(0));  // validates the length
  Tensor<T> x = audio;
  for (size_t i = 0; i < weights_.size(); ++i) {
    const int k = cfg_.kernels[i];
    const int s = cfg_.strides[i];
    x = conv1d(x, weights_[i], biases_[i], s, k - s);
    if (cfg_.layer_norm_between)
      x = layer_norm(x, ln_gain_[i], ln_bias_[i], static_cast<T>(kLayerNormEps));
    x = relu(x);
  }
  return x;
}

template <typename T>
std::vector<ParamRef<T>> ConvEncoder<T>::parameters() {
  std::vector<ParamRef<T>> out;
  for (size_t i = 0; i < weights_.size(); ++i) {
    const std::string tag = "enc" + std::to_string(i);
    out.push_back({tag + ".w", &weights_[i]});
    out.push_back({tag + ".b", &biases_[i]});
    if (cfg_.layer_norm_between) {
      out.push_back({tag + ".ln.gain", &ln_gain_[i]});
      out.push_back({tag + ".ln.bias", &ln_bias_[i]});
    }
  }
  return out;
}

template <typename T>
void ConvEncoder<T>::set_trainable(bool trainable) {
  for (auto& p : parameters()) p.tensor->set_requires_grad(trainable);
}

template <typename T>
ConvEncoder<T> ConvEncoder<T>::clone() const {
  ConvEncoder<T> out;
  out.cfg_ = cfg_;
  for (const auto& w : weights_) out.weights_.push_back(clone_param(w));
  for (const auto& b : biases_) out.biases_.push_back(clone_param(b));
  for (const auto& g : ln_gain_) out.ln_gain_.push_back(clone_param(g));
  for (const auto& b : ln_bias_) out.ln_bias_.push_back(clone_param(b));
  return out;
}

template <typename T>
Tensor<T> audio_to_tensor(std::span<const float> samples) {
  std::vector<T> v(samples.begin(), samples.end());
  return Tensor<T>::from_values({static_cast<int>(samples.size()), 1},
                                std::move(v));
}

// ---- Attention ---------------------------------------------------------------

void AttentionConfig::validate() const {
  require(model_dim >= 1, "attention: model_dim must be >= 1");
  require(heads >= 1, "attention: heads must be >= 1");
  require(model_dim % heads == 0,
          "attention: model_dim must be divisible by heads");
  require(width >= 0, "attention: width must be >= 1 or 0 for unbounded");
}

std::vector<uint8_t> attention_window_mask(int t, int width) {
  require(t >= 1, "attention_window_mask: t must be >= 1");
  require(width >= 0, "attention_window_mask: width must be >= 0");
  std::vector<uint8_t> mask(static_cast<size_t>(t) * t, 0);
  for (int i = 0; i < t; ++i) {
    const int lo = width == kUnboundedWidth ? 0 : std::max(0, i - width + 1);
    for (int j = lo; j <= i; ++j) mask[static_cast<size_t>(i) * t + j] = 1;
  }
  return mask;
}

template <typename T>
SelfAttention<T>::SelfAttention(const AttentionConfig& cfg, const Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.model_dim;
  wq_ = init_weight<T>({d, d}, d, rng, "attn.wq");
  wk_ = init_weight<T>({d, d}, d, rng, "attn.wk");
  wv_ = init_weight<T>({d, d}, d, rng, "attn.wv");
  wo_ = init_weight<T>({d, d}, d, rng, "attn.wo");
  bq_ = init_const<T>({d}, T(0));
  bk_ = init_const<T>({d}, T(0));
  bv_ = init_const<T>({d}, T(0));
  bo_ = init_const<T>({d}, T(0));
}

template <typename T>
Tensor<T> SelfAttention<T>::forward(const Tensor<T>& x,
                                    const std::vector<uint8_t>& mask) const {
  require(x.rank() == 2 && x.dim(1) == cfg_.model_dim,
          "attention: x must be {t, ", cfg_.model_dim, "}");
  const int t = x.dim(0);
  require(static_cast<int64_t>(mask.size()) == int64_t(t) * t,
          "attention: mask must be {t, t}");
  const int heads = cfg_.heads;
  const int dh = cfg_.model_dim / heads;
  const T inv_sqrt_dh = T(1) / std::sqrt(static_cast<T>(dh));

  auto q = add_rowwise(matmul(x, wq_), bq_);
  auto k = add_rowwise(matmul(x, wk_), bk_);
  auto v = add_rowwise(matmul(x, wv_), bv_);

  std::vector<Tensor<T>> head_outputs;
  head_outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    auto qh = slice(q, 1, h * dh, (h + 1) * dh);
    auto kh = slice(k, 1, h * dh, (h + 1) * dh);
    auto vh = slice(v, 1, h * dh, (h + 1) * dh);
    auto scores = scale(matmul(qh, transpose(kh)), inv_sqrt_dh);
    auto probs = masked_softmax(scores, mask);
    head_outputs.push_back(matmul(probs, vh));
  }
  auto merged = concat(head_outputs, 1);
  return add_rowwise(matmul(merged, wo_), bo_);
}

template <typename T>
std::vector<ParamRef<T>> SelfAttention<T>::parameters() {
  return {{"attn.wq", &wq_}, {"attn.wk", &wk_}, {"attn.wv", &wv_},
          {"attn.wo", &wo_}, {"attn.bq", &bq_}, {"attn.bk", &bk_},
          {"attn.bv", &bv_}, {"attn.bo", &bo_}};
}

template <typename T>
void SelfAttention<T>::set_trainable(bool trainable) {
  for (auto& p : parameters()) p.tensor->set_requires_grad(trainable);
}

template <typename T>
SelfAttention<T> SelfAttention<T>::clone() const {
  SelfAttention<T> out;
  out.cfg_ = cfg_;
  out.wq_ = clone_param(wq_);
  out.wk_ = clone_param(wk_);
  out.wv_ = clone_param(wv_);
  out.wo_ = clone_param(wo_);
  out.bq_ = clone_param(bq_);
  out.bk_ = clone_param(bk_);
  out.bv_ = clone_param(bv_);
  out.bo_ = clone_param(bo_);
  return out;
}

// ---- Transformer layer ---------------------------------------------------------

void TransformerLayerConfig::validate() const {
  attention.validate();
  require(ff_hidden >= 1, "transformer layer: ff_hidden must be >= 1");
  require(out_dim >= 0, "transformer layer: out_dim must be >= 0");
}

template <typename T>
TransformerLayer<T>::TransformerLayer(const TransformerLayerConfig& cfg,
                                      const Rng& rng)
    : cfg_(cfg), attn_(cfg.attention, rng) {
  cfg_.validate();
  const int d = cfg_.attention.model_dim;
  const int hidden = cfg_.ff_hidden;
  const int out = cfg_.effective_out_dim();
  ln1_gain_ = init_const<T>({d}, T(1));
  ln1_bias_ = init_const<T>({d}, T(0));
  ff_w1_ = init_weight<T>({d, hidden}, d, rng, "ff.w1");
  ff_b1_ = init_const<T>({hidden}, T(0));
  ff_w2_ = init_weight<T>({hidden, out}, hidden, rng, "ff.w2");
  ff_b2_ = init_const<T>({out}, T(0));
  if (out == d) {
    ln2_gain_ = init_const<T>({d}, T(1));
    ln2_bias_ = init_const<T>({d}, T(0));
  }
}

template <typename T>
Tensor<T> TransformerLayer<T>::forward(const Tensor<T>& x,
                                       const std::vector<uint8_t>& mask) const {
  const int d = cfg_.attention.model_dim;
  auto attended = attn_.forward(x, mask);
  auto h = layer_norm(add(x, attended), ln1_gain_, ln1_bias_,
                      static_cast<T>(kLayerNormEps));
  auto f = add_rowwise(
      matmul(relu(add_rowwise(matmul(h, ff_w1_), ff_b1_)), ff_w2_), ff_b2_);
  if (cfg_.effective_out_dim() != d) return f;
  return layer_norm(add(h, f), ln2_gain_, ln2_bias_,
                    static_cast<T>(kLayerNormEps));
}

template <typename T>
std::vector<ParamRef<T>> TransformerLayer<T>::parameters() {
  std::vector<ParamRef<T>> out = attn_.parameters();
  out.push_back({"ln1.gain", &ln1_gain_});
  out.push_back({"ln1.bias", &ln1_bias_});
  out.push_back({"ff.w1", &ff_w1_});
  out.push_back({"ff.b1", &ff_b1_});
  out.push_back({"ff.w2", &ff_w2_});
  out.push_back({"ff.b2", &ff_b2_});
  if (cfg_.effective_out_dim() == cfg_.attention.model_dim) {
    out.push_back({"ln2.gain", &ln2_gain_});
    out.push_back({"ln2.bias", &ln2_bias_});
  }
  return out;
}

template <typename T>
void TransformerLayer<T>::set_trainable(bool trainable) {
  for (auto& p : parameters()) p.tensor->set_requires_grad(trainable);
}

template <typename T>
TransformerLayer<T> TransformerLayer<T>::clone() const {
  TransformerLayer<T> out;
  out.cfg_ = cfg_;
  out.attn_ = attn_.clone();
  out.ln1_gain_ = clone_param(ln1_gain_);
  out.ln1_bias_ = clone_param(ln1_bias_);
  out.ff_w1_ = clone_param(ff_w1_);
  out.ff_b1_ = clone_param(ff_b1_);
  out.ff_w2_ = clone_param(ff_w2_);
  out.ff_b2_ = clone_param(ff_b2_);
  if (ln2_gain_.defined()) {
    out.ln2_gain_ = clone_param(ln2_gain_);
    out.ln2_bias_ = clone_param(ln2_bias_);
  }
  return out;
}

// ---- Autoregressive network ------------------------------------------------------

void ArConfig::validate() const {
  require(layers >= 1, "ar network: layers must be >= 1");
  layer.validate();
  require(layer.effective_out_dim() == layer.attention.model_dim,
          "ar network: stacked layers must preserve model_dim");
  require(final_dim >= 1, "ar network: final_dim must be >= 1");
}

int total_context(int layers, int width) {
  require(layers >= 1, "total_context: layers must be >= 1");
  require(width >= 0, "total_context: width must be >= 0");
  if (width == kUnboundedWidth) return kUnboundedWidth;
  return layers * (width - 1) + 1;
}

template <typename T>
Tensor<T> sinusoidal_positions(int t, int dim) {
  require(t >= 1, "sinusoidal_positions: t must be >= 1");
  require(dim >= 2 && dim % 2 == 0, "sinusoidal_positions: dim must be even");
  std::vector<T> v(static_cast<size_t>(t) * dim);
  for (int pos = 0; pos < t; ++pos) {
    for (int i = 0; i < dim / 2; ++i) {
      const double rate =
          std::pow(10000.0, -2.0 * static_cast<double>(i) / dim);
      const double angle = pos * rate;
      v[static_cast<size_t>(pos) * dim + 2 * i] = static_cast<T>(std::sin(angle));
      v[static_cast<size_t>(pos) * dim + 2 * i + 1] =
          static_cast<T>(std::cos(angle));
    }
  }
  return Tensor<T>::from_values({t, dim}, std::move(v));
}

template <typename T>
ArNetwork<T>::ArNetwork(const ArConfig& cfg, const Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  for (int i = 0; i < cfg_.layers; ++i)
    layers_.emplace_back(cfg_.layer, rng.child("layer" + std::to_string(i)));
  const int d = cfg_.layer.attention.model_dim;
  final_w_ = init_weight<T>({d, cfg_.final_dim}, d, rng, "final.w");
  final_b_ = init_const<T>({cfg_.final_dim}, T(0));
}

template <typename T>
typename ArNetwork<T>::Output ArNetwork<T>::forward_with_hidden(
    const Tensor<T>& z) const {
  const int d = cfg_.layer.attention.model_dim;
  require(z.rank() == 2 && z.dim(1) == d, "ar network: z must be {t, ", d, "}");
  const int t = z.dim(0);
  Tensor<T> x = z;
  if (cfg_.positional_encoding) x = add(x, sinusoidal_positions<T>(t, d));
  const auto mask = attention_window_mask(t, cfg_.layer.attention.width);
  for (const auto& layer : layers_) x = layer.forward(x, mask);
  Output out;
  out.hidden = x;
  out.context = add_rowwise(matmul(x, final_w_), final_b_);
  return out;
}

template <typename T>
Tensor<T> ArNetwork<T>::forward(const Tensor<T>& z) const {
  return forward_with_hidden(z).context;
}

template <typename T>
std::vector<ParamRef<T>> ArNetwork<T>::parameters() {
  std::vector<ParamRef<T>> out;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i) + ".";
    for (auto& p : layers_[i].parameters())
      out.push_back({prefix + p.name, p.tensor});
  }
  out.push_back({"final.w", &final_w_});
  out.push_back({"final.b", &final_b_});
  return out;
}

template <typename T>
void ArNetwork<T>::set_trainable(bool trainable) {
  for (auto& p : parameters()) p.tensor->set_requires_grad(trainable);
}

template <typename T>
ArNetwork<T> ArNetwork<T>::clone() const {
  ArNetwork<T> out;
  out.cfg_ = cfg_;
  for (const auto& layer : layers_) out.layers_.push_back(layer.clone());
  out.final_w_ = clone_param(final_w_);
  out.final_b_ = clone_param(final_b_);
  return out;
}

template <typename T>
void ArNetwork<T>::set_attention_width(int width) {
  require(width >= 0, "set_attention_width: width must be >= 0");
  cfg_.layer.attention.width = width;
}

// ---- Explicit instantiation ----------------------------------------------------

#define CTXPRE_INSTANTIATE_LAYERS(T)                              \
  template class ConvEncoder<T>;                                  \
  template class SelfAttention<T>;                                \
  template class TransformerLayer<T>;                             \
  template class ArNetwork<T>;                                    \
  template Tensor<T> audio_to_tensor<T>(std::span<const float>);  \
  template Tensor<T> sinusoidal_positions<T>(int, int);

CTXPRE_INSTANTIATE_LAYERS(float)
CTXPRE_INSTANTIATE_LAYERS(double)

#undef CTXPRE_INSTANTIATE_LAYERS

}  // namespace ctxpre
