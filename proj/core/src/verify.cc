// core/src/verify.cc

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

#include "ctxpre/verify.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ctxpre/abx.h"
#include "ctxpre/common.h"
#include "ctxpre/fft.h"
#include "ctxpre/layers.h"
#include "ctxpre/objectives.h"
#include "ctxpre/reference.h"
#include "ctxpre/rng.h"
#include "ctxpre/tensor.h"

namespace ctxpre {
namespace {

constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr int kGradSeeds = 10;

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

bool is_key_bias(const std::string& name) {
  if (name == "bk") return true;
  return name.size() >= 3 && name.compare(name.size() - 3, 3, ".bk") == 0;
}

struct GradSite {
  double err = 0.0;
  std::string site;
};

// Worst finite-difference error over the module input and every parameter.
// The softmax key bias shifts all scores of a row equally, so its true
// gradient is identically zero; it is checked by shift invariance instead
// and reports a full-scale error if the loss moves.
GradSite module_grad_error(
    const std::function<Tensor<double>(const Tensor<double>&)>& of_input,
    const Tensor<double>& x0,
    const std::function<Tensor<double>()>& score,
    std::vector<ParamRef<double>> params) {
  GradSite worst{grad_check<double>(of_input, x0, kGradStep), "input"};
  for (ParamRef<double>& p : params) {
    Tensor<double> original = *p.tensor;
    if (is_key_bias(p.name)) {
      const double base = score().scalar();
      Tensor<double> shifted = original.detach();
      std::vector<double> bumped(shifted.value().begin(),
                                 shifted.value().end());
      for (double& v : bumped) v += 0.5;
      shifted.overwrite_values(bumped);
      *p.tensor = shifted;
      const double moved = score().scalar();
      *p.tensor = original;
      if (std::abs(moved - base) > 1e-9 * std::max(1.0, std::abs(base)))
        return {1.0, p.name + " breaks softmax shift invariance"};
      continue;
    }
    auto f = [&](const Tensor<double>& t) {
      Tensor<double> candidate = t;
      candidate.set_requires_grad(t.requires_grad());
      *p.tensor = candidate;
      Tensor<double> loss = score();
      *p.tensor = original;
      return loss;
    };
    const double err = grad_check<double>(f, original.detach(), kGradStep);
    if (err > worst.err) worst = {err, p.name};
  }
  return worst;
}

VerifyCheck grad_result(const std::string& name, const GradSite& worst) {
  return {name, worst.err <= kGradTol,
          "max relative error " + fmt(worst.err) + " at " + worst.site +
              " over " + fmt(kGradSeeds) + " seeds"};
}

VerifyCheck check_encoder_gradients() {
  GradSite worst;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    EncoderConfig cfg;
    cfg.kernels = {4, 3};
    cfg.strides = {2, 1};
    cfg.channels = 5;
    ConvEncoder<double> enc(cfg, Rng(100 + seed));
    Rng rng(200 + seed);
    Tensor<double> audio = randn_tensor<double>({24, 1}, rng);
    Tensor<double> probe = randn_tensor<double>({12, 5}, rng);
    auto of_input = [&](const Tensor<double>& t) {
      return sum(mul(enc.forward(t), probe));
    };
    auto score = [&]() { return sum(mul(enc.forward(audio), probe)); };
    const GradSite got =
        module_grad_error(of_input, audio, score, enc.parameters());
    if (got.err > worst.err) worst = got;
  }
  return grad_result("conv-encoder", worst);
}

VerifyCheck check_attention_gradients() {
  GradSite worst;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    AttentionConfig cfg;
    cfg.model_dim = 6;
    cfg.heads = 2;
    cfg.width = 3;
    SelfAttention<double> attn(cfg, Rng(110 + seed));
    const std::vector<uint8_t> mask = attention_window_mask(5, cfg.width);
    Rng rng(210 + seed);
    Tensor<double> x0 = randn_tensor<double>({5, 6}, rng);
    Tensor<double> probe = randn_tensor<double>({5, 6}, rng);
    auto of_input = [&](const Tensor<double>& t) {
      return sum(mul(attn.forward(t, mask), probe));
    };
    auto score = [&]() { return sum(mul(attn.forward(x0, mask), probe)); };
    const GradSite got =
        module_grad_error(of_input, x0, score, attn.parameters());
    if (got.err > worst.err) worst = got;
  }
  return grad_result("windowed-attention", worst);
}

VerifyCheck check_layer_gradients() {
  GradSite worst;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    TransformerLayerConfig cfg;
    cfg.attention.model_dim = 6;
    cfg.attention.heads = 2;
    cfg.attention.width = 2;
    cfg.ff_hidden = 5;
    TransformerLayer<double> layer(cfg, Rng(120 + seed));
    const std::vector<uint8_t> mask = attention_window_mask(4, 2);
    Rng rng(220 + seed);
    Tensor<double> x0 = randn_tensor<double>({4, 6}, rng);
    Tensor<double> probe = randn_tensor<double>({4, 6}, rng);
    auto of_input = [&](const Tensor<double>& t) {
      return sum(mul(layer.forward(t, mask), probe));
    };
    auto score = [&]() { return sum(mul(layer.forward(x0, mask), probe)); };
    const GradSite got =
        module_grad_error(of_input, x0, score, layer.parameters());
    if (got.err > worst.err) worst = got;
  }
  return grad_result("transformer-layer", worst);
}

VerifyCheck check_predictor_gradients() {
  GradSite worst;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    PredictorConfig cfg;
    cfg.steps = 2;
    cfg.step_dim = 4;
    cfg.layer.attention.model_dim = 6;
    cfg.layer.attention.heads = 2;
    cfg.layer.ff_hidden = 5;
    PredictorNetwork<double> pred(cfg, Rng(130 + seed));
    Rng rng(230 + seed);
    Tensor<double> c0 = randn_tensor<double>({4, 6}, rng);
    Tensor<double> probe0 = randn_tensor<double>({4, 4}, rng);
    Tensor<double> probe1 = randn_tensor<double>({4, 4}, rng);
    auto of_input = [&](const Tensor<double>& t) {
      std::vector<Tensor<double>> v = pred.forward(t);
      return add(sum(mul(v[0], probe0)), sum(mul(v[1], probe1)));
    };
    auto score = [&]() { return of_input(c0); };
    const GradSite got =
        module_grad_error(of_input, c0, score, pred.parameters());
    if (got.err > worst.err) worst = got;
  }
  return grad_result("predictor", worst);
}

VerifyCheck check_contrastive_gradients(bool last_only,
                                        const std::string& name) {
  double worst = 0.0;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    CpcConfig cfg;
    cfg.steps = 2;
    cfg.negatives = 6;
    cfg.last_only = last_only;
    Rng rng(140 + seed);
    std::vector<CpcItem<double>> items(2);
    const int lengths[2] = {5, 6};
    for (int i = 0; i < 2; ++i) {
      items[i].z = randn_tensor<double>({lengths[i], 4}, rng);
      for (int s = 0; s < cfg.steps; ++s)
        items[i].v.push_back(randn_tensor<double>({lengths[i], 4}, rng));
    }
    const uint64_t draw_seed = 240 + static_cast<uint64_t>(seed);
    auto with_z = [&](const Tensor<double>& t) {
      std::vector<CpcItem<double>> probe = items;
      probe[0].z = t;
      Rng r(draw_seed);
      return cpc_loss(probe, cfg, r);
    };
    const int scored = last_only ? cfg.steps - 1 : 0;
    auto with_v = [&](const Tensor<double>& t) {
      std::vector<CpcItem<double>> probe = items;
      probe[1].v[scored] = t;
      Rng r(draw_seed);
      return cpc_loss(probe, cfg, r);
    };
    worst = std::max(worst, static_cast<double>(grad_check<double>(
                                with_z, items[0].z, kGradStep)));
    worst = std::max(worst, static_cast<double>(grad_check<double>(
                                with_v, items[1].v[scored], kGradStep)));
  }
  return {name, worst <= kGradTol,
          "max relative error " + fmt(worst) + " over " + fmt(kGradSeeds) +
              " seeds"};
}

VerifyCheck check_masked_gradients() {
  double worst = 0.0;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    Rng rng(150 + seed);
    Tensor<double> logits = randn_tensor<double>({6, 7}, rng);
    std::vector<int> targets(6);
    for (int& t : targets) t = static_cast<int>(rng.uniform_int(7));
    std::vector<uint8_t> mask = {1, 0, 1, 0, 0, 1};
    for (bool masked_only : {false, true}) {
      auto f = [&](const Tensor<double>& t) {
        return bestrq_loss(t, targets, mask, masked_only);
      };
      worst = std::max(worst, static_cast<double>(
                                  grad_check<double>(f, logits, kGradStep)));
    }
  }
  return {"masked-prediction-loss", worst <= kGradTol,
          "max relative error " + fmt(worst) + " over " + fmt(kGradSeeds) +
              " seeds"};
}

// ---- causality -------------------------------------------------------------

Tensor<double> row_probe(int rows, int cols, int row, Rng& rng) {
  std::vector<double> values(static_cast<size_t>(rows) * cols, 0.0);
  for (int c = 0; c < cols; ++c)
    values[static_cast<size_t>(row) * cols + c] = rng.normal();
  return Tensor<double>::from_values({rows, cols}, std::move(values));
}

VerifyCheck check_attention_window() {
  for (int depth : {1, 2, 4}) {
    for (int width : {2, 4, 8, 16}) {
      ArConfig cfg;
      cfg.layers = depth;
      cfg.layer.attention.model_dim = 8;
      cfg.layer.attention.heads = 2;
      cfg.layer.attention.width = width;
      cfg.layer.ff_hidden = 6;
      cfg.final_dim = 6;
      ArNetwork<double> ar(cfg, Rng(500 + 16 * depth + width));
      const int total = total_context(depth, width);
      const int t_len = total + 3;
      const int query = t_len - 2;
      Rng rng(600 + 16 * depth + width);
      Tensor<double> z = randn_tensor<double>({t_len, 8}, rng);
      z.set_requires_grad(true);
      Tensor<double> probe = row_probe(t_len, 6, query, rng);
      backward(sum(mul(ar.forward(z), probe)));
      const auto& g = z.grad();
      const int window_start = query - (total - 1);
      for (int r = 0; r < t_len; ++r) {
        double mass = 0.0;
        for (int d = 0; d < 8; ++d)
          mass += std::abs(g[static_cast<size_t>(r) * 8 + d]);
        const bool outside = r > query || r < window_start;
        if (outside && mass != 0.0)
          return {"attention-window", false,
                  "leak at frame " + fmt(r) + " for width " + fmt(width) +
                      ", depth " + fmt(depth)};
        if ((r == query || r == window_start) && mass == 0.0)
          return {"attention-window", false,
                  "window narrower than claimed at width " + fmt(width) +
                      ", depth " + fmt(depth)};
      }
    }
  }
  return {"attention-window", true,
          "exact zeros outside depth*(width-1)+1 frames for widths "
          "{2,4,8,16} and depths {1,2,4}"};
}

VerifyCheck check_window_equivalence() {
  for (int depth : {1, 2, 4}) {
    ArConfig cfg;
    cfg.layers = depth;
    cfg.layer.attention.model_dim = 8;
    cfg.layer.attention.heads = 2;
    cfg.layer.attention.width = 16;
    cfg.layer.ff_hidden = 6;
    cfg.final_dim = 6;
    ArNetwork<double> ar(cfg, Rng(510 + depth));
    Rng rng(610 + depth);
    Tensor<double> z = randn_tensor<double>({12, 8}, rng);
    const Tensor<double> wide = ar.forward(z);  // width 16 > 12 frames
    ar.set_attention_width(kUnboundedWidth);
    const Tensor<double> unbounded = ar.forward(z);
    ar.set_attention_width(12);  // width == frame count
    const Tensor<double> exact = ar.forward(z);
    const size_t bytes = sizeof(double) * static_cast<size_t>(wide.numel());
    if (std::memcmp(wide.value().data(), unbounded.value().data(), bytes) !=
            0 ||
        std::memcmp(exact.value().data(), unbounded.value().data(), bytes) !=
            0)
      return {"saturated-window-identity", false,
              "width >= frames differs from unbounded at depth " + fmt(depth)};
  }
  return {"saturated-window-identity", true,
          "width >= frame count is bit-identical to unbounded"};
}

VerifyCheck check_receptive_field() {
  EncoderConfig cfg;  // stock strided stack
  cfg.channels = 8;
  const int rf = encoder_receptive_field(cfg);
  const int hop = encoder_total_stride(cfg);
  if (rf != 465 || hop != 160)
    return {"encoder-receptive-field", false,
            "formula gives rf " + fmt(rf) + ", hop " + fmt(hop)};

  // Jacobian support, pooled over seeds so a dead activation on one draw
  // cannot shrink the measured field.
  const int n = 960;
  std::vector<char> support3(n, 0), support4(n, 0);
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    for (int frame : {3, 4}) {
      ConvEncoder<double> enc(cfg, Rng(700 + seed));
      Rng rng(800 + 2 * seed + frame);
      Tensor<double> audio = randn_tensor<double>({n, 1}, rng);
      audio.set_requires_grad(true);
      Tensor<double> probe = row_probe(6, 8, frame, rng);
      backward(sum(mul(enc.forward(audio), probe)));
      const auto& g = audio.grad();
      std::vector<char>& support = frame == 3 ? support3 : support4;
      for (int i = 0; i < n; ++i)
        if (g[i] != 0.0) support[i] = 1;
    }
  }
  auto bounds = [](const std::vector<char>& s) {
    int first = -1, last = -1;
    for (int i = 0; i < static_cast<int>(s.size()); ++i)
      if (s[i]) {
        if (first < 0) first = i;
        last = i;
      }
    return std::pair<int, int>(first, last);
  };
  const auto [first3, last3] = bounds(support3);
  const auto [first4, last4] = bounds(support4);
  if (last3 != 3 * 160 + 159)
    return {"encoder-receptive-field", false,
            "frame 3 support ends at sample " + fmt(last3) +
                ", expected 639"};
  if (last3 - first3 + 1 != 465 || last4 - first4 + 1 != 465)
    return {"encoder-receptive-field", false,
            "support spans " + fmt(last3 - first3 + 1) + " and " +
                fmt(last4 - first4 + 1) + " samples, expected 465"};
  if (first4 - first3 != 160 || last4 - last3 != 160)
    return {"encoder-receptive-field", false,
            "consecutive frames shift by " + fmt(first4 - first3) +
                " samples, expected 160"};
  for (int i = first3; i <= last3; ++i)
    if (!support3[i])
      return {"encoder-receptive-field", false,
              "hole in the support at sample " + fmt(i)};
  return {"encoder-receptive-field", true,
          "Jacobian support is 465 samples wide and slides 160 per frame"};
}

VerifyCheck check_frame_hop() {
  EncoderConfig enc;
  FeatureConfig feat;
  for (int n : {160, 161, 319, 320, 480, 960, 1600, 16000}) {
    if (encoder_output_length(enc, n) != n / 160)
      return {"frame-hop", false,
              "encoder frames for " + fmt(n) + " samples: " +
                  fmt(encoder_output_length(enc, n))};
  }
  for (int n : {400, 480, 559, 560, 800, 1600, 16000}) {
    if (log_mel_frames(n, feat) != n / 160)
      return {"frame-hop", false,
              "featurizer frames for " + fmt(n) + " samples: " +
                  fmt(log_mel_frames(n, feat))};
  }
  for (int n : {480, 800, 1600}) {
    if (encoder_output_length(enc, n + 160) !=
            encoder_output_length(enc, n) + 1 ||
        log_mel_frames(n + 160, feat) != log_mel_frames(n, feat) + 1)
      return {"frame-hop", false,
              "adding 160 samples does not add one frame at " + fmt(n)};
  }
  return {"frame-hop", true,
          "both front ends emit floor(samples / 160) frames"};
}

// ---- oracles ---------------------------------------------------------------

SegmentRep make_random_segment(Rng& rng, int n, int dim,
                               const std::string& phone) {
  SegmentRep seg;
  seg.n = n;
  seg.dim = dim;
  seg.phone = phone;
  seg.prev = "p";
  seg.next = "q";
  seg.speaker = "s";
  seg.subset = "dev-clean";
  seg.frames.resize(static_cast<size_t>(n) * dim);
  for (int i = 0; i < n; ++i) {
    double norm = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double v = rng.normal();
      seg.frames[static_cast<size_t>(i) * dim + d] = v;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (int d = 0; d < dim; ++d)
      seg.frames[static_cast<size_t>(i) * dim + d] /= norm;
  }
  return seg;
}

VerifyCheck check_dtw_enumeration() {
  Rng rng(900);
  double worst = 0.0;
  for (int m = 1; m <= 6; ++m) {
    for (int n = 1; n <= 6; ++n) {
      const SegmentRep a = make_random_segment(rng, m, 3, "aa");
      const SegmentRep b = make_random_segment(rng, n, 3, "aa");
      std::vector<double> d(static_cast<size_t>(m) * n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          d[static_cast<size_t>(i) * n + j] =
              angular_distance(a.frame(i), b.frame(j));
      const double want = reference::dtw_min_ratio_enumerate(d, m, n);
      const double got = dtw_divergence(a, b);
      worst = std::max(worst, std::abs(want - got));
    }
  }
  return {"alignment-enumeration", worst <= 1e-9,
          "max |dtw - enumerated| = " + fmt(worst) +
              " over all lattices up to 6x6"};
}

VerifyCheck check_abx_enumeration() {
  Rng rng(910);
  const std::pair<int, int> sizes[] = {{5, 6}, {2, 1}, {4, 4}};
  for (const auto& [na, nb] : sizes) {
    std::vector<SegmentRep> a_store, b_store;
    for (int i = 0; i < na; ++i)
      a_store.push_back(
          make_random_segment(rng, 2 + static_cast<int>(rng.uniform_int(4)),
                              3, "aa"));
    for (int i = 0; i < nb; ++i)
      b_store.push_back(
          make_random_segment(rng, 2 + static_cast<int>(rng.uniform_int(4)),
                              3, "bb"));
    std::vector<const SegmentRep*> a_class, b_class;
    for (const SegmentRep& s : a_store) a_class.push_back(&s);
    for (const SegmentRep& s : b_store) b_class.push_back(&s);

    const double got = abx_error(a_class, b_class);
    double sum = 0.0;
    int triples = 0;
    for (const SegmentRep* a : a_class)
      for (const SegmentRep* x : a_class) {
        if (a == x) continue;
        for (const SegmentRep* b : b_class) {
          const double da = dtw_divergence(*a, *x);
          const double db = dtw_divergence(*b, *x);
          sum += da > db ? 1.0 : da == db ? 0.5 : 0.0;
          ++triples;
        }
      }
    const double want = sum / triples;
    if (got != want)
      return {"triple-enumeration", false,
              "mismatch " + fmt(got) + " vs " + fmt(want) + " on " +
                  fmt(triples) + " triples"};
  }
  return {"triple-enumeration", true,
          "matches exhaustive triple scoring exactly on all instances"};
}

VerifyCheck check_quantizer() {
  const Codebook codebook = Codebook::make(32, 8, 123);
  Rng rng(920);
  for (int i = 0; i < 100; ++i) {
    std::vector<float> z(8);
    for (float& v : z) v = static_cast<float>(rng.normal());
    const int got = codebook.quantize(z);
    const int want = reference::naive_nearest_prototype(
        z, codebook.prototypes(), 32, 8);
    if (got != want)
      return {"quantizer-nearest", false,
              "vector " + fmt(i) + ": got prototype " + fmt(got) +
                  ", brute force says " + fmt(want)};
  }
  return {"quantizer-nearest", true,
          "matches brute-force nearest prototype on 100 vectors"};
}

// ---- losses ----------------------------------------------------------------

VerifyCheck check_contrastive_uniform() {
  // With every latent frame identical, all candidate scores coincide and
  // the softmax is exactly uniform over the 128 candidates.
  Rng rng(930);
  const int t_len = 10, h = 4;
  std::vector<double> row(h);
  for (double& v : row) v = rng.normal();
  std::vector<double> zvals;
  for (int t = 0; t < t_len; ++t) zvals.insert(zvals.end(), row.begin(),
                                               row.end());
  CpcItem<double> item;
  item.z = Tensor<double>::from_values({t_len, h}, std::move(zvals));
  item.v.push_back(randn_tensor<double>({t_len, h}, rng));
  item.v.push_back(randn_tensor<double>({t_len, h}, rng));
  CpcConfig cfg;
  cfg.steps = 2;
  cfg.negatives = 128;
  Rng draws(931);
  const double loss = cpc_loss<double>({item}, cfg, draws).scalar();
  const double want = std::log(128.0);
  return {"contrastive-uniform", std::abs(loss - want) < 1e-6,
          "loss " + fmt(loss) + " vs ln 128 = " + fmt(want)};
}

VerifyCheck check_masked_uniform() {
  const int t_len = 5, k = 8192;
  const Tensor<double> logits = Tensor<double>::full({t_len, k}, 0.0);
  const std::vector<int> targets = {0, 17, 8191, 4096, 3};
  const double all =
      bestrq_loss(logits, targets, {}, false).scalar();
  const std::vector<uint8_t> mask = {1, 0, 0, 1, 0};
  const double masked =
      bestrq_loss(logits, targets, mask, true).scalar();
  const double want = std::log(8192.0);
  const bool ok =
      std::abs(all - want) < 1e-6 && std::abs(masked - want) < 1e-6;
  return {"masked-uniform", ok,
          "loss " + fmt(all) + " (all frames), " + fmt(masked) +
              " (masked only) vs ln 8192 = " + fmt(want)};
}

VerifyCheck check_average_equals_last() {
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(940 + seed);
    std::vector<CpcItem<double>> items(1);
    items[0].z = randn_tensor<double>({7, 4}, rng);
    items[0].v.push_back(randn_tensor<double>({7, 4}, rng));
    CpcConfig average;
    average.steps = 1;
    average.negatives = 6;
    CpcConfig last = average;
    last.last_only = true;
    Rng r1(950 + seed), r2(950 + seed);
    const double a = cpc_loss(items, average, r1).scalar();
    const double b = cpc_loss(items, last, r2).scalar();
    if (a != b)
      return {"one-step-mode-identity", false,
              "average " + fmt(a) + " != last " + fmt(b) + " at seed " +
                  fmt(seed)};
  }
  return {"one-step-mode-identity", true,
          "averaged and last-step losses agree bitwise at one step"};
}

}  // namespace

bool VerifyReport::all_passed() const {
  for (const VerifyCheck& c : checks)
    if (!c.passed) return false;
  return true;
}

std::string VerifyReport::to_text() const {
  std::ostringstream os;
  int passed = 0;
  for (const VerifyCheck& c : checks) {
    os << (c.passed ? "[PASS] " : "[FAIL] ") << suite << "/" << c.name << ": "
       << c.detail << "\n";
    if (c.passed) ++passed;
  }
  os << "suite " << suite << ": " << passed << "/" << checks.size()
     << " checks passed\n";
  return os.str();
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = {"gradients", "causality",
                                                 "oracles", "losses"};
  return names;
}

VerifyReport run_verify_suite(const std::string& suite) {
  VerifyReport report;
  report.suite = suite;
  if (suite == "gradients") {
    report.checks.push_back(check_encoder_gradients());
    report.checks.push_back(check_attention_gradients());
    report.checks.push_back(check_layer_gradients());
    report.checks.push_back(check_predictor_gradients());
    report.checks.push_back(
        check_contrastive_gradients(false, "contrastive-average-loss"));
    report.checks.push_back(
        check_contrastive_gradients(true, "contrastive-last-loss"));
    report.checks.push_back(check_masked_gradients());
  } else if (suite == "causality") {
    report.checks.push_back(check_attention_window());
    report.checks.push_back(check_window_equivalence());
    report.checks.push_back(check_receptive_field());
    report.checks.push_back(check_frame_hop());
  } else if (suite == "oracles") {
    report.checks.push_back(check_dtw_enumeration());
    report.checks.push_back(check_abx_enumeration());
    report.checks.push_back(check_quantizer());
  } else if (suite == "losses") {
    report.checks.push_back(check_contrastive_uniform());
    report.checks.push_back(check_masked_uniform());
    report.checks.push_back(check_average_equals_last());
  } else {
    require(false, "unknown verify suite '", suite,
            "'; expected one of gradients, causality, oracles, losses");
  }
  return report;
}

}  // namespace ctxpre
