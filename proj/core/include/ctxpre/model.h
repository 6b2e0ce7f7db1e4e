// core/include/ctxpre/model.h

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

#ifndef CTXPRE_MODEL_H_
#define CTXPRE_MODEL_H_

#include <span>
#include <string>
#include <vector>

#include "ctxpre/fft.h"
#include "ctxpre/layers.h"
#include "ctxpre/objectives.h"
#include "ctxpre/rng.h"
#include "ctxpre/tensor.h"

namespace ctxpre {

enum class Objective { kCpc, kCpcLast, kBestRq };

// Stable names used in config files and checkpoints.
std::string objective_name(Objective objective);
Objective parse_objective(const std::string& name);

// Full architecture + objective hyperparameters.  The context width lives in
// ar.layer.attention.width; the prediction head stays unbounded.
struct ModelConfig {
  Objective objective = Objective::kCpc;
  EncoderConfig encoder;     // learned wave front end (contrastive objectives)
  FeatureConfig features;    // log-Mel front end (bestrq), not learned
  ArConfig ar;               // context network producing c
  PredictorConfig predictor; // prediction head on top of c
  int negatives = 128;       // contrastive candidates per anchor, incl. positive
  BestRqConfig bestrq;

  bool is_contrastive() const { return objective != Objective::kBestRq; }
  int context_width() const { return ar.layer.attention.width; }
  int representation_dim() const { return ar.final_dim; }
  // Output frames for one utterance of `samples` samples; both front ends
  // land on the same 10 ms grid.
  int frames_for(int64_t samples) const;
  // Contrastive loss settings implied by this config.
  CpcConfig cpc_config() const;

  void validate() const;
};

// Baseline configuration for each objective with all dependent widths wired
// up (latent/context width 256; bestrq swaps in the 80-dim featurizer and a
// codebook-sized prediction head).
ModelConfig default_model_config(Objective objective);

// ---- Contrastive model -------------------------------------------------------

// Wave encoder -> context network -> prediction head.  forward() returns the
// tensors entering the contrastive loss; context() is the exported
// representation path (the prediction head is discarded after training).
template <typename T>
class CpcModel {
 public:
  CpcModel(const ModelConfig& cfg, const Rng& rng);

  Tensor<T> encode(std::span<const float> audio) const;   // z: {t2, H1}
  Tensor<T> context(std::span<const float> audio) const;  // c: {t2, H2}
  CpcItem<T> forward(std::span<const float> audio) const;

  std::vector<ParamRef<T>> parameters();
  void set_trainable(bool trainable);
  CpcModel clone() const;
  void set_attention_width(int width);

  const ModelConfig& config() const { return cfg_; }

 private:
  CpcModel(ModelConfig cfg, ConvEncoder<T> enc, ArNetwork<T> ar,
           PredictorNetwork<T> pred);
  ModelConfig cfg_;
  ConvEncoder<T> enc_;
  ArNetwork<T> ar_;
  PredictorNetwork<T> pred_;
};

// ---- Masked-prediction model -------------------------------------------------

template <typename T>
struct BestRqForward {
  Tensor<T> logits;           // {t, codebook_size}
  std::vector<int> targets;   // quantized clean features, detached
  std::vector<uint8_t> mask;  // 1 = frame was masked at the input
};

// Log-Mel featurizer (not learned) -> context network -> codebook-sized
// prediction head.  Targets always come from the clean features; the mask
// only affects the network input.
template <typename T>
class BestRqModel {
 public:
  BestRqModel(const ModelConfig& cfg, const Rng& rng);

  // Clean featurizer output, row-major {frames, n_mels}.
  std::vector<float> clean_features(std::span<const float> audio,
                                    int* frames_out) const;
  BestRqForward<T> forward(std::span<const float> audio, Rng& mask_rng) const;
  Tensor<T> context(std::span<const float> audio) const;  // clean input path

  const Codebook& codebook() const { return codebook_; }

  std::vector<ParamRef<T>> parameters();
  void set_trainable(bool trainable);
  BestRqModel clone() const;
  void set_attention_width(int width);

  const ModelConfig& config() const { return cfg_; }

 private:
  BestRqModel(ModelConfig cfg, ArNetwork<T> ar, PredictorNetwork<T> pred,
              Codebook codebook);
  ModelConfig cfg_;
  ArNetwork<T> ar_;
  PredictorNetwork<T> pred_;
  Codebook codebook_;
};

}  // namespace ctxpre

#endif  // CTXPRE_MODEL_H_
