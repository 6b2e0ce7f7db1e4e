// core/include/ctxpre/objectives.h

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

#ifndef CTXPRE_OBJECTIVES_H_
#define CTXPRE_OBJECTIVES_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ctxpre/layers.h"
#include "ctxpre/rng.h"
#include "ctxpre/tensor.h"

namespace ctxpre {

// ---- Prediction network ----------------------------------------------------

// The predictor's attention is causal and unbounded by default; only the
// context network's attention is width-limited.
TransformerLayerConfig predictor_default_layer();

struct PredictorConfig {
  int steps = 12;     // S prediction sequences
  int step_dim = 256; // width of each sequence
  TransformerLayerConfig layer = predictor_default_layer();

  int total_out_dim() const { return steps * step_dim; }
  void validate() const;
};

// One transformer layer whose feed-forward output has width steps*step_dim,
// split along channels into `steps` sequences.  Causality is inherited from
// the attention mask, so prediction s at frame t sees context frames <= t.
template <typename T>
class PredictorNetwork {
 public:
  PredictorNetwork(const PredictorConfig& cfg, const Rng& rng);

  // c: {t, model_dim} -> steps tensors of shape {t, step_dim}.
  std::vector<Tensor<T>> forward(const Tensor<T>& c) const;

  std::vector<ParamRef<T>> parameters();
  void set_trainable(bool trainable);
  PredictorNetwork clone() const;
  const PredictorConfig& config() const { return cfg_; }

 private:
  PredictorNetwork() = default;
  PredictorConfig cfg_;
  TransformerLayer<T> layer_;
};

// ---- Contrastive loss -------------------------------------------------------

struct CpcConfig {
  int steps = 12;      // S
  int negatives = 128; // M candidates per anchor, including the positive
  bool last_only = false;  // score only step S instead of averaging 1..S

  void validate() const;
};

// Candidate pool indices for one anchor: element 0 is the positive, the
// remaining m-1 are uniform with replacement over [0, pool_size), so the
// positive can reappear by chance and duplicates are kept.
std::vector<uint32_t> sample_negatives(uint64_t pool_size, uint32_t positive,
                                       int m, Rng& rng);

// One utterance's tensors entering the batch loss.
template <typename T>
struct CpcItem {
  Tensor<T> z;               // {t, h} latent sequence
  std::vector<Tensor<T>> v;  // steps tensors {t, h}, prediction sequences
};

// InfoNCE over a batch.  For each utterance, each scored step s and each
// anchor t in [0, t_u - steps), the positive z_{t+s} is scored against its
// prediction v_t^(s) alongside negatives drawn from the pool of all latent
// frames in the batch (in item order).  The per-step loss is the
// frame-weighted mean of -log softmax(positive) over all anchors in the
// batch; the result averages over scored steps (all steps, or only step S
// with last_only).  Negative draws consume `rng` in a fixed documented
// order: by item, then by scored step ascending, then by anchor frame.
// Gradients flow into every z and v involved, including negatives from
// other utterances.  Throws std::invalid_argument when an utterance is not
// longer than `steps`, naming both numbers.
template <typename T>
Tensor<T> cpc_loss(const std::vector<CpcItem<T>>& items, const CpcConfig& cfg,
                   Rng& rng);

// ---- BEST-RQ ---------------------------------------------------------------

struct BestRqConfig {
  int codebook_size = 8192;  // H3
  int latent_dim = 80;       // log-Mel bands
  double mask_prob = 0.01;   // per-frame span start probability
  int mask_span = 12;        // frames per span
  uint64_t codebook_seed = 0;
  bool masked_only = false;   // score only masked frames instead of all
  bool gaussian_fill = false; // fill masked frames with noise instead of zeros

  void validate() const;
};

// Frozen random quantizer: size x dim prototypes drawn once from the
// standard normal; never updated by gradients.
class Codebook {
 public:
  static Codebook make(int size, int dim, uint64_t seed);

  int size() const { return size_; }
  int dim() const { return dim_; }
  std::span<const float> prototypes() const { return protos_; }

  // Scales z to unit norm, then returns the index of the nearest prototype
  // by Euclidean distance; ties break to the lowest index.  Throws
  // NumericalError on a zero vector.
  int quantize(std::span<const float> z) const;

 private:
  Codebook(int size, int dim, std::vector<float> protos);
  int size_ = 0;
  int dim_ = 0;
  std::vector<float> protos_;
};

// One byte per frame, 1 = masked.  Each frame independently starts a span
// of `span` frames with probability p; spans union and clip at the end.
std::vector<uint8_t> mask_spans(int t, double p, int span, Rng& rng);

// Replaces masked rows of x by the fill (zeros, or unit-normal noise drawn
// from rng when gaussian_fill).  The fill enters as a constant, so masked
// rows receive exactly zero gradient.
template <typename T>
Tensor<T> apply_mask(const Tensor<T>& x, const std::vector<uint8_t>& mask,
                     bool gaussian_fill, Rng& rng);

// Quantizes each feature row (computed from clean, unmasked features).
std::vector<int> bestrq_targets(std::span<const float> features, int frames,
                                const Codebook& codebook);

// Mean over scored frames of -log softmax(logits_t)[target_t].  Scored
// frames are all frames, or only masked ones when masked_only (then at
// least one frame must be masked).  Targets enter as plain indices, so no
// gradient flows through the target computation.
template <typename T>
Tensor<T> bestrq_loss(const Tensor<T>& logits, std::span<const int> targets,
                      const std::vector<uint8_t>& mask, bool masked_only);

}  // namespace ctxpre

#endif  // CTXPRE_OBJECTIVES_H_
