// core/src/model.cc

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

#include "ctxpre/model.h"

#include <utility>

#include "ctxpre/common.h"
#include "ctxpre/wav.h"

namespace ctxpre {

std::string objective_name(Objective objective) {
  switch (objective) {
    case Objective::kCpc: return "cpc";
    case Objective::kCpcLast: return "cpc-last";
    case Objective::kBestRq: return "bestrq";
  }
  throw std::invalid_argument("objective_name: unknown objective value");
}

Objective parse_objective(const std::string& name) {
  if (name == "cpc") return Objective::kCpc;
  if (name == "cpc-last") return Objective::kCpcLast;
  if (name == "bestrq") return Objective::kBestRq;
  throw std::invalid_argument("objective: expected cpc, cpc-last or bestrq, got '" +
                              name + "'");
}

int ModelConfig::frames_for(int64_t samples) const {
  if (is_contrastive()) return encoder_output_length(encoder, samples);
  return log_mel_frames(static_cast<int>(samples), features);
}

CpcConfig ModelConfig::cpc_config() const {
  CpcConfig out;
  out.steps = predictor.steps;
  out.negatives = negatives;
  out.last_only = objective == Objective::kCpcLast;
  return out;
}

void ModelConfig::validate() const {
  ar.validate();
  predictor.validate();
  const int context_dim = ar.layer.attention.model_dim;
  require(predictor.layer.attention.model_dim == ar.final_dim,
          "model: prediction head consumes ", predictor.layer.attention.model_dim,
          "-dim input but the context network emits ", ar.final_dim);
  if (is_contrastive()) {
    encoder.validate();
    cpc_config().validate();
    require(context_dim == encoder.channels,
            "model: context network expects ", context_dim,
            "-dim input but the encoder emits ", encoder.channels, " channels");
    require(predictor.step_dim == encoder.channels,
            "model: contrastive scores need prediction width ",
            predictor.step_dim, " to match latent width ", encoder.channels);
  } else {
    features.validate();
    bestrq.validate();
    require(features.sample_rate == kSampleRate,
            "model: featurizer sample rate ", features.sample_rate,
            " does not match corpus rate ", kSampleRate);
    require(context_dim == features.n_mels,
            "model: context network expects ", context_dim,
            "-dim input but the featurizer emits ", features.n_mels, " bands");
    require(bestrq.latent_dim == features.n_mels,
            "model: codebook dim ", bestrq.latent_dim,
            " does not match the ", features.n_mels, "-band featurizer");
    require(predictor.steps == 1,
            "model: masked prediction uses a single step, got ",
            predictor.steps);
    require(predictor.step_dim == bestrq.codebook_size,
            "model: prediction head width ", predictor.step_dim,
            " does not match codebook size ", bestrq.codebook_size);
  }
}

ModelConfig default_model_config(Objective objective) {
  ModelConfig cfg;
  cfg.objective = objective;
  if (objective == Objective::kBestRq) {
    cfg.ar.layer.attention.model_dim = cfg.features.n_mels;
    cfg.predictor.steps = 1;
    cfg.predictor.step_dim = cfg.bestrq.codebook_size;
  }
  cfg.validate();
  return cfg;
}

// ---- Contrastive model -------------------------------------------------------

namespace {

const ModelConfig& checked_contrastive(const ModelConfig& cfg) {
  cfg.validate();
  require(cfg.is_contrastive(),
          "model: objective ", objective_name(cfg.objective),
          " does not use the wave-encoder model");
  return cfg;
}

const ModelConfig& checked_masked(const ModelConfig& cfg) {
  cfg.validate();
  require(!cfg.is_contrastive(),
          "model: objective ", objective_name(cfg.objective),
          " does not use the featurizer model");
  return cfg;
}

}  // namespace

template <typename T>
CpcModel<T>::CpcModel(const ModelConfig& cfg, const Rng& rng)
    : cfg_(checked_contrastive(cfg)),
      enc_(cfg_.encoder, rng.child("enc")),
      ar_(cfg_.ar, rng.child("ar")),
      pred_(cfg_.predictor, rng.child("head")) {}

template <typename T>
CpcModel<T>::CpcModel(ModelConfig cfg, ConvEncoder<T> enc, ArNetwork<T> ar,
                      PredictorNetwork<T> pred)
    : cfg_(std::move(cfg)),
      enc_(std::move(enc)),
      ar_(std::move(ar)),
      pred_(std::move(pred)) {}

template <typename T>
Tensor<T> CpcModel<T>::encode(std::span<const float> audio) const {
  return enc_.forward(audio_to_tensor<T>(audio));
}

template <typename T>
Tensor<T> CpcModel<T>::context(std::span<const float> audio) const {
  return ar_.forward(encode(audio));
}

template <typename T>
CpcItem<T> CpcModel<T>::forward(std::span<const float> audio) const {
  CpcItem<T> out;
  out.z = encode(audio);
  out.v = pred_.forward(ar_.forward(out.z));
  return out;
}

template <typename T>
std::vector<ParamRef<T>> CpcModel<T>::parameters() {
  // Sub-module names never collide: encN.* / layerN.*, final.* / pred.*.
  std::vector<ParamRef<T>> out = enc_.parameters();
  for (auto& p : ar_.parameters()) out.push_back(p);
  for (auto& p : pred_.parameters()) out.push_back(p);
  return out;
}

template <typename T>
void CpcModel<T>::set_trainable(bool trainable) {
  enc_.set_trainable(trainable);
  ar_.set_trainable(trainable);
  pred_.set_trainable(trainable);
}

template <typename T>
CpcModel<T> CpcModel<T>::clone() const {
  return CpcModel<T>(cfg_, enc_.clone(), ar_.clone(), pred_.clone());
}

template <typename T>
void CpcModel<T>::set_attention_width(int width) {
  ar_.set_attention_width(width);
  cfg_.ar.layer.attention.width = width;
}

// ---- Masked-prediction model -------------------------------------------------

template <typename T>
BestRqModel<T>::BestRqModel(const ModelConfig& cfg, const Rng& rng)
    : cfg_(checked_masked(cfg)),
      ar_(cfg_.ar, rng.child("ar")),
      pred_(cfg_.predictor, rng.child("head")),
      codebook_(Codebook::make(cfg_.bestrq.codebook_size,
                               cfg_.bestrq.latent_dim,
                               cfg_.bestrq.codebook_seed)) {}

template <typename T>
BestRqModel<T>::BestRqModel(ModelConfig cfg, ArNetwork<T> ar,
                            PredictorNetwork<T> pred, Codebook codebook)
    : cfg_(std::move(cfg)),
      ar_(std::move(ar)),
      pred_(std::move(pred)),
      codebook_(std::move(codebook)) {}

template <typename T>
std::vector<float> BestRqModel<T>::clean_features(std::span<const float> audio,
                                                  int* frames_out) const {
  return log_mel(audio, cfg_.features, frames_out);
}

namespace {

template <typename T>
Tensor<T> features_to_tensor(const std::vector<float>& feats, int frames,
                             int dim) {
  std::vector<T> values(feats.size());
  for (size_t i = 0; i < feats.size(); ++i) values[i] = static_cast<T>(feats[i]);
  return Tensor<T>::from_values({frames, dim}, std::move(values));
}

}  // namespace

template <typename T>
BestRqForward<T> BestRqModel<T>::forward(std::span<const float> audio,
                                         Rng& mask_rng) const {
  int frames = 0;
  const auto feats = clean_features(audio, &frames);
  BestRqForward<T> out;
  out.targets = bestrq_targets(feats, frames, codebook_);
  out.mask = mask_spans(frames, cfg_.bestrq.mask_prob, cfg_.bestrq.mask_span,
                        mask_rng);
  auto x = features_to_tensor<T>(feats, frames, cfg_.features.n_mels);
  auto masked = apply_mask(x, out.mask, cfg_.bestrq.gaussian_fill, mask_rng);
  out.logits = pred_.forward(ar_.forward(masked))[0];
  return out;
}

template <typename T>
Tensor<T> BestRqModel<T>::context(std::span<const float> audio) const {
  int frames = 0;
  const auto feats = clean_features(audio, &frames);
  return ar_.forward(features_to_tensor<T>(feats, frames, cfg_.features.n_mels));
}

template <typename T>
std::vector<ParamRef<T>> BestRqModel<T>::parameters() {
  // The codebook is frozen by construction and intentionally absent here.
  std::vector<ParamRef<T>> out = ar_.parameters();
  for (auto& p : pred_.parameters()) out.push_back(p);
  return out;
}

template <typename T>
void BestRqModel<T>::set_trainable(bool trainable) {
  ar_.set_trainable(trainable);
  pred_.set_trainable(trainable);
}

template <typename T>
BestRqModel<T> BestRqModel<T>::clone() const {
  return BestRqModel<T>(cfg_, ar_.clone(), pred_.clone(), codebook_);
}

template <typename T>
void BestRqModel<T>::set_attention_width(int width) {
  ar_.set_attention_width(width);
  cfg_.ar.layer.attention.width = width;
}

#define CTXPRE_INSTANTIATE_MODEL(T)    \
  template class CpcModel<T>;          \
  template class BestRqModel<T>;       \
  template struct BestRqForward<T>;

CTXPRE_INSTANTIATE_MODEL(float)
CTXPRE_INSTANTIATE_MODEL(double)

#undef CTXPRE_INSTANTIATE_MODEL

}  // namespace ctxpre
