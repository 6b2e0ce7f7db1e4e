// core/src/objectives.cc

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

#include "ctxpre/objectives.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "ctxpre/common.h"

namespace ctxpre {

// ---- Prediction network ----------------------------------------------------

TransformerLayerConfig predictor_default_layer() {
  TransformerLayerConfig layer;
  layer.attention.width = kUnboundedWidth;
  return layer;
}

void PredictorConfig::validate() const {
  require(steps >= 1, "predictor: steps must be >= 1, got ", steps);
  require(step_dim >= 1, "predictor: step_dim must be >= 1, got ", step_dim);
  TransformerLayerConfig effective = layer;
  effective.out_dim = total_out_dim();
  effective.validate();
}

template <typename T>
PredictorNetwork<T>::PredictorNetwork(const PredictorConfig& cfg,
                                      const Rng& rng)
    : cfg_(cfg) {
  cfg_.layer.out_dim = cfg_.total_out_dim();
  cfg_.validate();
  layer_ = TransformerLayer<T>(cfg_.layer, rng.child("pred"));
}

template <typename T>
std::vector<Tensor<T>> PredictorNetwork<T>::forward(const Tensor<T>& c) const {
  require(c.rank() == 2 && c.dim(1) == cfg_.layer.attention.model_dim,
          "predictor: input must be {t, ", cfg_.layer.attention.model_dim,
          "}, got ", shape_to_string(c.shape()));
  const auto mask =
      attention_window_mask(c.dim(0), cfg_.layer.attention.width);
  return split(layer_.forward(c, mask), 1, cfg_.steps);
}

template <typename T>
std::vector<ParamRef<T>> PredictorNetwork<T>::parameters() {
  std::vector<ParamRef<T>> out;
  for (auto& p : layer_.parameters())
    out.push_back({"pred." + p.name, p.tensor});
  return out;
}

template <typename T>
void PredictorNetwork<T>::set_trainable(bool trainable) {
  layer_.set_trainable(trainable);
}

template <typename T>
PredictorNetwork<T> PredictorNetwork<T>::clone() const {
  PredictorNetwork<T> out;
  out.cfg_ = cfg_;
  out.layer_ = layer_.clone();
  return out;
}

// ---- Contrastive loss -------------------------------------------------------

void CpcConfig::validate() const {
  require(steps >= 1, "cpc: steps must be >= 1, got ", steps);
  require(negatives >= 2, "cpc: need at least 2 candidates, got ", negatives);
}

std::vector<uint32_t> sample_negatives(uint64_t pool_size, uint32_t positive,
                                       int m, Rng& rng) {
  require(pool_size >= 1, "sample_negatives: empty latent pool");
  require(positive < pool_size, "sample_negatives: positive index ", positive,
          " outside pool of ", pool_size);
  require(m >= 2, "sample_negatives: need at least 2 candidates, got ", m);
  std::vector<uint32_t> out(static_cast<size_t>(m));
  out[0] = positive;
  for (int i = 1; i < m; ++i)
    out[i] = static_cast<uint32_t>(rng.uniform_int(pool_size));
  return out;
}

template <typename T>
Tensor<T> cpc_loss(const std::vector<CpcItem<T>>& items, const CpcConfig& cfg,
                   Rng& rng) {
  cfg.validate();
  require(!items.empty(), "cpc_loss: empty batch");
  const int s_count = cfg.steps;
  const int m = cfg.negatives;

  const int h = items[0].z.dim(1);
  int64_t total_frames = 0;
  int64_t total_anchors = 0;
  std::vector<int64_t> offset(items.size());
  for (size_t u = 0; u < items.size(); ++u) {
    const auto& it = items[u];
    require(it.z.rank() == 2 && it.z.dim(1) == h,
            "cpc_loss: latent sequences must share width ", h, ", item ", u,
            " has ", shape_to_string(it.z.shape()));
    require(static_cast<int>(it.v.size()) == s_count, "cpc_loss: item ", u,
            " has ", it.v.size(), " prediction sequences, expected ", s_count);
    const int t_u = it.z.dim(0);
    require(t_u > s_count, "cpc_loss: utterance ", u, " has ", t_u,
            " frames but requires more than steps=", s_count);
    for (int s = 0; s < s_count; ++s) {
      require(it.v[s].rank() == 2 && it.v[s].dim(0) == t_u &&
                  it.v[s].dim(1) == h,
              "cpc_loss: prediction sequence ", s, " of item ", u,
              " must match latents {", t_u, ", ", h, "}, got ",
              shape_to_string(it.v[s].shape()));
    }
    offset[u] = total_frames;
    total_frames += t_u;
    total_anchors += t_u - s_count;
  }

  // Value pool of every latent frame in the batch, in item order.
  auto pool = std::make_shared<std::vector<T>>();
  pool->reserve(static_cast<size_t>(total_frames) * h);
  for (const auto& it : items)
    pool->insert(pool->end(), it.z.value().begin(), it.z.value().end());

  const int first_step = cfg.last_only ? s_count : 1;
  const int scored_steps = s_count - first_step + 1;

  // Candidate indices and softmax probabilities per anchor, in draw order.
  auto indices = std::make_shared<std::vector<uint32_t>>();
  auto probs = std::make_shared<std::vector<T>>();
  indices->reserve(static_cast<size_t>(total_anchors) * scored_steps * m);
  probs->reserve(static_cast<size_t>(total_anchors) * scored_steps * m);

  const double anchor_weight = 1.0 / (static_cast<double>(scored_steps) *
                                      static_cast<double>(total_anchors));
  double loss = 0.0;
  std::vector<double> scores(static_cast<size_t>(m));
  for (size_t u = 0; u < items.size(); ++u) {
    const int t_u = items[u].z.dim(0);
    for (int s = first_step; s <= s_count; ++s) {
      const std::span<const T> v = items[u].v[s - 1].value();
      for (int t = 0; t < t_u - s_count; ++t) {
        const auto positive = static_cast<uint32_t>(offset[u] + t + s);
        auto cand = sample_negatives(static_cast<uint64_t>(total_frames),
                                     positive, m, rng);
        const T* vrow = v.data() + static_cast<size_t>(t) * h;
        double max_score = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
          const T* zrow = pool->data() + static_cast<size_t>(cand[i]) * h;
          double acc = 0.0;
          for (int d = 0; d < h; ++d) acc += double(zrow[d]) * double(vrow[d]);
          scores[i] = acc;
          max_score = std::max(max_score, acc);
        }
        const double raw_positive = scores[0];
        double norm = 0.0;
        for (int i = 0; i < m; ++i) {
          const double e = std::exp(scores[i] - max_score);
          scores[i] = e;  // reused as unnormalized probability
          norm += e;
        }
        loss += anchor_weight * (max_score + std::log(norm) - raw_positive);
        for (int i = 0; i < m; ++i)
          probs->push_back(static_cast<T>(scores[i] / norm));
        indices->insert(indices->end(), cand.begin(), cand.end());
      }
    }
  }

  std::vector<Tensor<T>> inputs;
  inputs.reserve(items.size() * (static_cast<size_t>(s_count) + 1));
  for (const auto& it : items) {
    inputs.push_back(it.z);
    for (const auto& v : it.v) inputs.push_back(v);
  }

  std::vector<int64_t> offsets = offset;
  auto backward_fn = [pool, indices, probs, offsets, h, m, s_count, first_step,
                      anchor_weight](TensorNode<T>& out) {
    const double seed = static_cast<double>(out.grad[0]);
    size_t at = 0;  // anchor cursor into indices/probs
    const size_t n_items = out.inputs.size() / (static_cast<size_t>(s_count) + 1);
    for (size_t u = 0; u < n_items; ++u) {
      auto& z_node = *out.inputs[u * (s_count + 1)];
      const int t_u = z_node.shape[0];
      for (int s = first_step; s <= s_count; ++s) {
        auto& v_node = *out.inputs[u * (s_count + 1) + s];
        auto& v_grad = ensure_grad(v_node);
        for (int t = 0; t < t_u - s_count; ++t, ++at) {
          const uint32_t* cand = indices->data() + at * m;
          const T* p = probs->data() + at * m;
          const T* vrow =
              v_node.value.data() + static_cast<size_t>(t) * h;
          T* dvrow = v_grad.data() + static_cast<size_t>(t) * h;
          for (int i = 0; i < m; ++i) {
            const double delta =
                seed * anchor_weight *
                (static_cast<double>(p[i]) - (i == 0 ? 1.0 : 0.0));
            const T* zrow = pool->data() + static_cast<size_t>(cand[i]) * h;
            // Locate the owning latent tensor of candidate cand[i].
            size_t owner = 0;
            while (owner + 1 < n_items &&
                   offsets[owner + 1] <= static_cast<int64_t>(cand[i]))
              ++owner;
            auto& zo = *out.inputs[owner * (s_count + 1)];
            T* dzrow =
                ensure_grad(zo).data() +
                (static_cast<size_t>(cand[i]) - offsets[owner]) * h;
            for (int d = 0; d < h; ++d) {
              dvrow[d] += static_cast<T>(delta * zrow[d]);
              dzrow[d] += static_cast<T>(delta * vrow[d]);
            }
          }
        }
      }
    }
  };

  return make_op<T>("cpc_loss", {1}, {static_cast<T>(loss)}, std::move(inputs),
                    std::move(backward_fn));
}

// ---- BEST-RQ ---------------------------------------------------------------

void BestRqConfig::validate() const {
  require(codebook_size >= 1, "bestrq: codebook_size must be >= 1, got ",
          codebook_size);
  require(latent_dim >= 1, "bestrq: latent_dim must be >= 1, got ", latent_dim);
  require(mask_prob >= 0.0 && mask_prob <= 1.0,
          "bestrq: mask_prob must be in [0, 1], got ", mask_prob);
  require(mask_span >= 1, "bestrq: mask_span must be >= 1, got ", mask_span);
}

Codebook::Codebook(int size, int dim, std::vector<float> protos)
    : size_(size), dim_(dim), protos_(std::move(protos)) {}

Codebook Codebook::make(int size, int dim, uint64_t seed) {
  require(size >= 1 && dim >= 1, "codebook: need positive size and dim, got ",
          size, " x ", dim);
  std::vector<float> protos(static_cast<size_t>(size) * dim);
  Rng(seed).child("codebook").fill_normal(std::span<float>(protos), 1.0);
  return Codebook(size, dim, std::move(protos));
}

int Codebook::quantize(std::span<const float> z) const {
  require(static_cast<int>(z.size()) == dim_, "codebook: vector of dim ",
          z.size(), " against prototypes of dim ", dim_);
  double sq = 0.0;
  for (float v : z) sq += static_cast<double>(v) * v;
  require_numeric(sq > 0.0, "codebook: cannot quantize a zero vector");
  const double inv = 1.0 / std::sqrt(sq);
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size_; ++i) {
    const float* row = protos_.data() + static_cast<size_t>(i) * dim_;
    double dist = 0.0;
    for (int d = 0; d < dim_; ++d) {
      const double diff = static_cast<double>(z[d]) * inv - row[d];
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

std::vector<uint8_t> mask_spans(int t, double p, int span, Rng& rng) {
  require(t >= 0, "mask_spans: negative frame count");
  require(p >= 0.0 && p <= 1.0, "mask_spans: probability ", p,
          " outside [0, 1]");
  require(span >= 1, "mask_spans: span must be >= 1, got ", span);
  std::vector<uint8_t> mask(static_cast<size_t>(t), 0);
  for (int i = 0; i < t; ++i) {
    if (rng.uniform() < p) {
      const int end = std::min(t, i + span);
      for (int j = i; j < end; ++j) mask[j] = 1;
    }
  }
  return mask;
}

template <typename T>
Tensor<T> apply_mask(const Tensor<T>& x, const std::vector<uint8_t>& mask,
                     bool gaussian_fill, Rng& rng) {
  require(x.rank() == 2, "apply_mask: input must be 2-D, got ",
          shape_to_string(x.shape()));
  const int t = x.dim(0);
  const int c = x.dim(1);
  require(static_cast<int>(mask.size()) == t, "apply_mask: mask of ",
          mask.size(), " frames against input of ", t);
  std::vector<T> keep_values(static_cast<size_t>(t) * c);
  for (int r = 0; r < t; ++r) {
    std::fill_n(keep_values.begin() + static_cast<size_t>(r) * c, c,
                mask[r] ? T(0) : T(1));
  }
  auto masked = mul(x, Tensor<T>::from_values({t, c}, std::move(keep_values)));
  if (!gaussian_fill) return masked;
  std::vector<T> fill(static_cast<size_t>(t) * c, T(0));
  for (int r = 0; r < t; ++r) {
    if (!mask[r]) continue;
    for (int d = 0; d < c; ++d)
      fill[static_cast<size_t>(r) * c + d] = static_cast<T>(rng.normal());
  }
  return add(masked, Tensor<T>::from_values({t, c}, std::move(fill)));
}

std::vector<int> bestrq_targets(std::span<const float> features, int frames,
                                const Codebook& codebook) {
  require(frames >= 0 &&
              features.size() ==
                  static_cast<size_t>(frames) * codebook.dim(),
          "bestrq_targets: ", features.size(), " values for ", frames,
          " frames of dim ", codebook.dim());
  std::vector<int> targets(static_cast<size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    targets[f] = codebook.quantize(
        features.subspan(static_cast<size_t>(f) * codebook.dim(),
                         codebook.dim()));
  }
  return targets;
}

namespace {

// -mean over scored rows of picked log-probability entries; the backward
// scatters straight into those entries, avoiding a one-hot matrix.
template <typename T>
Tensor<T> nll_rows(const Tensor<T>& log_probs, std::span<const int> targets,
                   const std::vector<char>& scored, int64_t n_scored) {
  const int t = log_probs.dim(0);
  const int c = log_probs.dim(1);
  double loss = 0.0;
  for (int r = 0; r < t; ++r) {
    if (scored[r])
      loss -= log_probs.value()[static_cast<size_t>(r) * c + targets[r]];
  }
  loss /= static_cast<double>(n_scored);
  std::vector<int> picked(targets.begin(), targets.end());
  auto backward_fn = [picked, scored, n_scored, c](TensorNode<T>& out) {
    const T coef =
        static_cast<T>(out.grad[0] / static_cast<T>(n_scored));
    auto& dx = ensure_grad(*out.inputs[0]);
    for (size_t r = 0; r < scored.size(); ++r) {
      if (scored[r]) dx[r * c + picked[r]] -= coef;
    }
  };
  return make_op<T>("nll_rows", {1}, {static_cast<T>(loss)}, {log_probs},
                    std::move(backward_fn));
}

}  // namespace

template <typename T>
Tensor<T> bestrq_loss(const Tensor<T>& logits, std::span<const int> targets,
                      const std::vector<uint8_t>& mask, bool masked_only) {
  require(logits.rank() == 2, "bestrq_loss: logits must be 2-D, got ",
          shape_to_string(logits.shape()));
  const int t = logits.dim(0);
  const int c = logits.dim(1);
  require(static_cast<int>(targets.size()) == t, "bestrq_loss: ",
          targets.size(), " targets for ", t, " frames");
  for (int r = 0; r < t; ++r) {
    require(targets[r] >= 0 && targets[r] < c, "bestrq_loss: target ",
            targets[r], " outside codebook of ", c);
  }
  std::vector<char> scored(static_cast<size_t>(t), 1);
  int64_t n_scored = t;
  if (masked_only) {
    require(static_cast<int>(mask.size()) == t,
            "bestrq_loss: mask of ", mask.size(), " frames for ", t);
    n_scored = 0;
    for (int r = 0; r < t; ++r) {
      scored[r] = mask[r] ? 1 : 0;
      n_scored += scored[r];
    }
    require(n_scored > 0, "bestrq_loss: masked_only with no masked frames");
  }
  return nll_rows(log_softmax(logits, 1), targets, scored, n_scored);
}

#define CTXPRE_INSTANTIATE_OBJECTIVES(T)                                      \
  template class PredictorNetwork<T>;                                         \
  template Tensor<T> cpc_loss<T>(const std::vector<CpcItem<T>>&,              \
                                 const CpcConfig&, Rng&);                     \
  template Tensor<T> apply_mask<T>(const Tensor<T>&,                          \
                                   const std::vector<uint8_t>&, bool, Rng&);  \
  template Tensor<T> bestrq_loss<T>(const Tensor<T>&, std::span<const int>,   \
                                    const std::vector<uint8_t>&, bool);

CTXPRE_INSTANTIATE_OBJECTIVES(float)
CTXPRE_INSTANTIATE_OBJECTIVES(double)

#undef CTXPRE_INSTANTIATE_OBJECTIVES

}  // namespace ctxpre
