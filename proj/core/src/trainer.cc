// core/src/trainer.cc

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

#include "ctxpre/trainer.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ctxpre/common.h"
#include "ctxpre/objectives.h"

namespace ctxpre {

// ---- Batching and splits -------------------------------------------------------

std::vector<std::vector<int>> make_batches(int n_items, int batch_size) {
  require(n_items >= 1, "make_batches: need at least one item");
  require(batch_size >= 1, "make_batches: batch size must be positive");
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n_items; start += batch_size) {
    std::vector<int> batch;
    for (int i = start; i < std::min(start + batch_size, n_items); ++i)
      batch.push_back(i);
    batches.push_back(std::move(batch));
  }
  return batches;
}

CorpusSplit split_train_validation(const Corpus& corpus, double val_fraction) {
  require(val_fraction > 0.0 && val_fraction < 1.0,
          "split: val_fraction must be in (0, 1), got ", val_fraction);
  std::vector<const Utterance*> pool;
  for (const Utterance& utt : corpus.utterances)
    if (utt.subset == "train") pool.push_back(&utt);
  require_data(pool.size() >= 2,
               "split: need at least two training utterances, found ",
               pool.size());
  const int64_t n = static_cast<int64_t>(pool.size());
  const int64_t n_val =
      std::max<int64_t>(1, std::llround(static_cast<double>(n) * val_fraction));
  require_data(n - n_val >= 1, "split: val_fraction ", val_fraction,
               " leaves no training utterance out of ", n);
  CorpusSplit split;
  split.train.assign(pool.begin(), pool.end() - n_val);
  split.validation.assign(pool.end() - n_val, pool.end());
  return split;
}

// ---- Optimizer --------------------------------------------------------------------

template <typename T>
AdamOptimizer<T>::AdamOptimizer(std::vector<ParamRef<T>> params,
                                const TrainConfig& cfg)
    : params_(std::move(params)),
      learning_rate_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      epsilon_(cfg.epsilon),
      clip_norm_(cfg.clip_norm) {
  cfg.validate();
  require(!params_.empty(), "optimizer: no parameters");
  std::set<std::string> names;
  for (const ParamRef<T>& p : params_) {
    require(p.tensor != nullptr && p.tensor->defined(),
            "optimizer: undefined parameter tensor ", p.name);
    require(names.insert(p.name).second, "optimizer: duplicate parameter ",
            p.name);
    OptimizerSlot slot;
    slot.name = p.name;
    slot.m.assign(static_cast<size_t>(p.tensor->numel()), 0.0);
    slot.v.assign(static_cast<size_t>(p.tensor->numel()), 0.0);
    slots_.push_back(std::move(slot));
  }
}

template <typename T>
void AdamOptimizer<T>::step() {
  ++steps_;
  std::vector<std::vector<T>> grads;
  grads.reserve(params_.size());
  double norm2 = 0.0;
  for (const ParamRef<T>& p : params_) {
    grads.push_back(p.tensor->grad_or_zeros());
    for (T g : grads.back()) norm2 += static_cast<double>(g) * g;
  }
  require_numeric(std::isfinite(norm2), "optimizer step ", steps_,
                  ": non-finite gradient norm");
  double grad_scale = 1.0;
  const double norm = std::sqrt(norm2);
  if (clip_norm_ > 0.0 && norm > clip_norm_) grad_scale = clip_norm_ / norm;

  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (size_t i = 0; i < params_.size(); ++i) {
    const std::span<const T> values = params_[i].tensor->value();
    std::vector<T> next(values.begin(), values.end());
    std::vector<double>& m = slots_[i].m;
    std::vector<double>& v = slots_[i].v;
    for (size_t k = 0; k < next.size(); ++k) {
      const double g = static_cast<double>(grads[i][k]) * grad_scale;
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g * g;
      const double update =
          learning_rate_ * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + epsilon_);
      next[k] = static_cast<T>(static_cast<double>(next[k]) - update);
    }
    params_[i].tensor->overwrite_values(next);
    params_[i].tensor->zero_grad();
  }
}

template <typename T>
void AdamOptimizer<T>::restore(int64_t steps,
                               const std::vector<OptimizerSlot>& slots) {
  require_data(steps >= 0, "optimizer restore: negative step count");
  require_data(slots.size() == slots_.size(),
               "optimizer restore: checkpoint has ", slots.size(),
               " moment slots, model has ", slots_.size());
  for (size_t i = 0; i < slots.size(); ++i) {
    require_data(slots[i].name == slots_[i].name,
                 "optimizer restore: slot ", i, " is '", slots[i].name,
                 "', expected '", slots_[i].name, "'");
    require_data(slots[i].m.size() == slots_[i].m.size() &&
                     slots[i].v.size() == slots_[i].v.size(),
                 "optimizer restore: size mismatch for ", slots[i].name);
  }
  slots_ = slots;
  steps_ = steps;
}

// ---- Model facade ----------------------------------------------------------------

template <typename T>
PretrainModel<T>::PretrainModel(const ModelConfig& cfg, const Rng& rng)
    : cfg_(cfg) {
  if (cfg.is_contrastive()) {
    cpc_.emplace(cfg, rng);
  } else {
    bestrq_.emplace(cfg, rng);
  }
}

template <typename T>
std::vector<ParamRef<T>> PretrainModel<T>::parameters() {
  return cpc_ ? cpc_->parameters() : bestrq_->parameters();
}

template <typename T>
void PretrainModel<T>::set_trainable(bool trainable) {
  if (cpc_) {
    cpc_->set_trainable(trainable);
  } else {
    bestrq_->set_trainable(trainable);
  }
}

template <typename T>
void PretrainModel<T>::set_attention_width(int width) {
  if (cpc_) {
    cpc_->set_attention_width(width);
  } else {
    bestrq_->set_attention_width(width);
  }
  cfg_.ar.layer.attention.width = width;
}

template <typename T>
PretrainModel<T> PretrainModel<T>::clone() const {
  PretrainModel<T> out;
  out.cfg_ = cfg_;
  if (cpc_) out.cpc_.emplace(cpc_->clone());
  if (bestrq_) out.bestrq_.emplace(bestrq_->clone());
  return out;
}

template <typename T>
Tensor<T> PretrainModel<T>::batch_loss(
    const std::vector<const Utterance*>& batch, Rng& rng) const {
  require(!batch.empty(), "batch_loss: empty batch");
  for (const Utterance* utt : batch)
    require(utt != nullptr, "batch_loss: null utterance");

  if (cpc_) {
    std::vector<CpcItem<T>> items;
    items.reserve(batch.size());
    for (const Utterance* utt : batch) items.push_back(cpc_->forward(utt->samples));
    return cpc_loss(items, cfg_.cpc_config(), rng);
  }

  // Masked prediction: per-utterance losses combine weighted by scored
  // frame count, which reproduces the loss over the pooled frames.
  const bool masked_only = cfg_.bestrq.masked_only;
  std::vector<Tensor<T>> losses;
  std::vector<int64_t> scored;
  int64_t total = 0;
  for (const Utterance* utt : batch) {
    const BestRqForward<T> fwd = bestrq_->forward(utt->samples, rng);
    int64_t n = 0;
    if (masked_only) {
      for (uint8_t m : fwd.mask) n += m != 0 ? 1 : 0;
    } else {
      n = static_cast<int64_t>(fwd.mask.size());
    }
    if (n == 0) continue;  // a lucky draw masked nothing; nothing to score
    losses.push_back(bestrq_loss(fwd.logits, fwd.targets, fwd.mask, masked_only));
    scored.push_back(n);
    total += n;
  }
  require_numeric(total > 0, "batch_loss: no scored frames in the batch");
  Tensor<T> out = scale(losses[0],
                        static_cast<T>(static_cast<double>(scored[0]) / total));
  for (size_t i = 1; i < losses.size(); ++i)
    out = add(out, scale(losses[i], static_cast<T>(
                                        static_cast<double>(scored[i]) / total)));
  return out;
}

template <typename T>
Tensor<T> PretrainModel<T>::context(std::span<const float> audio) const {
  return cpc_ ? cpc_->context(audio) : bestrq_->context(audio);
}

template <typename T>
const Codebook* PretrainModel<T>::codebook() const {
  return bestrq_ ? &bestrq_->codebook() : nullptr;
}

// ---- Checkpoints -----------------------------------------------------------------

namespace {

constexpr std::streamsize kCheckpointMagicLen = sizeof(kCheckpointMagic) - 1;

void put_le(std::ostream& out, uint64_t v, int bytes) {
  char b[8];
  for (int i = 0; i < bytes; ++i)
    b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, bytes);
}

uint64_t take_le(std::istream& in, int bytes, const std::string& path) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), bytes);
  require_data(in.gcount() == bytes, path, ": truncated checkpoint");
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_le(out, s.size(), 8);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& in, const std::string& path,
                        uint64_t max_len) {
  const uint64_t len = take_le(in, 8, path);
  require_data(len <= max_len, path, ": implausible string length ", len);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  require_data(in.gcount() == static_cast<std::streamsize>(len), path,
               ": truncated checkpoint");
  return s;
}

void put_f32(std::ostream& out, float v) {
  put_le(out, std::bit_cast<uint32_t>(v), 4);
}

float take_f32(std::istream& in, const std::string& path) {
  return std::bit_cast<float>(static_cast<uint32_t>(take_le(in, 4, path)));
}

void put_f64(std::ostream& out, double v) {
  put_le(out, std::bit_cast<uint64_t>(v), 8);
}

double take_f64(std::istream& in, const std::string& path) {
  return std::bit_cast<double>(take_le(in, 8, path));
}

constexpr uint64_t kMaxBlobNumel = uint64_t{1} << 31;
constexpr uint64_t kMaxBlobCount = uint64_t{1} << 20;

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  require_data(out.good(), path, ": cannot open for writing");
  out.write(kCheckpointMagic, kCheckpointMagicLen);
  put_le(out, kCheckpointVersion, 4);
  put_string(out, serialize_run_config(ckpt.config));
  require(ckpt.epoch >= 0, "save_checkpoint: negative epoch");
  put_le(out, static_cast<uint64_t>(ckpt.epoch), 8);
  put_f64(out, ckpt.val_loss);
  require(ckpt.opt_steps >= 0, "save_checkpoint: negative optimizer steps");
  put_le(out, static_cast<uint64_t>(ckpt.opt_steps), 8);

  put_le(out, ckpt.weights.size(), 4);
  for (const Checkpoint::Blob& blob : ckpt.weights) {
    put_string(out, blob.name);
    put_le(out, blob.dims.size(), 4);
    int64_t numel = 1;
    for (int d : blob.dims) {
      require(d >= 1, "save_checkpoint: bad dim in ", blob.name);
      put_le(out, static_cast<uint64_t>(d), 8);
      numel *= d;
    }
    require(static_cast<int64_t>(blob.values.size()) == numel,
            "save_checkpoint: ", blob.name, " values do not match its dims");
    for (float v : blob.values) put_f32(out, v);
  }

  put_le(out, ckpt.moments.size(), 4);
  for (const OptimizerSlot& slot : ckpt.moments) {
    require(slot.m.size() == slot.v.size(),
            "save_checkpoint: uneven moment arrays for ", slot.name);
    put_string(out, slot.name);
    put_le(out, slot.m.size(), 8);
    for (double v : slot.m) put_f64(out, v);
    for (double v : slot.v) put_f64(out, v);
  }

  put_le(out, ckpt.codebook.size(), 8);
  for (float v : ckpt.codebook) put_f32(out, v);
  out.flush();
  require_data(out.good(), path, ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require_data(in.good(), path, ": cannot open");
  char magic[sizeof(kCheckpointMagic)] = {};
  in.read(magic, kCheckpointMagicLen);
  require_data(in.gcount() == kCheckpointMagicLen &&
                   std::memcmp(magic, kCheckpointMagic, kCheckpointMagicLen) ==
                       0,
               path, ": not a checkpoint file");
  const uint64_t version = take_le(in, 4, path);
  require_data(version == kCheckpointVersion, path,
               ": unsupported checkpoint version ", version);

  Checkpoint ckpt;
  const std::string config_text = take_string(in, path, uint64_t{1} << 24);
  std::istringstream config_in(config_text);
  ckpt.config = parse_run_config(config_in, path + " (embedded config)");
  ckpt.epoch = static_cast<int>(take_le(in, 8, path));
  ckpt.val_loss = take_f64(in, path);
  ckpt.opt_steps = static_cast<int64_t>(take_le(in, 8, path));

  const uint64_t n_weights = take_le(in, 4, path);
  require_data(n_weights <= kMaxBlobCount, path, ": implausible weight count");
  for (uint64_t i = 0; i < n_weights; ++i) {
    Checkpoint::Blob blob;
    blob.name = take_string(in, path, 4096);
    const uint64_t rank = take_le(in, 4, path);
    require_data(rank >= 1 && rank <= 8, path, ": implausible rank for ",
                 blob.name);
    uint64_t numel = 1;
    for (uint64_t d = 0; d < rank; ++d) {
      const uint64_t dim = take_le(in, 8, path);
      require_data(dim >= 1 && dim <= kMaxBlobNumel, path,
                   ": implausible dim for ", blob.name);
      blob.dims.push_back(static_cast<int>(dim));
      numel *= dim;
      require_data(numel <= kMaxBlobNumel, path, ": implausible size for ",
                   blob.name);
    }
    blob.values.resize(numel);
    for (uint64_t k = 0; k < numel; ++k) blob.values[k] = take_f32(in, path);
    ckpt.weights.push_back(std::move(blob));
  }

  const uint64_t n_moments = take_le(in, 4, path);
  require_data(n_moments <= kMaxBlobCount, path, ": implausible moment count");
  for (uint64_t i = 0; i < n_moments; ++i) {
    OptimizerSlot slot;
    slot.name = take_string(in, path, 4096);
    const uint64_t len = take_le(in, 8, path);
    require_data(len <= kMaxBlobNumel, path, ": implausible moment size for ",
                 slot.name);
    slot.m.resize(len);
    slot.v.resize(len);
    for (uint64_t k = 0; k < len; ++k) slot.m[k] = take_f64(in, path);
    for (uint64_t k = 0; k < len; ++k) slot.v[k] = take_f64(in, path);
    ckpt.moments.push_back(std::move(slot));
  }

  const uint64_t n_codebook = take_le(in, 8, path);
  require_data(n_codebook <= kMaxBlobNumel, path,
               ": implausible codebook size");
  ckpt.codebook.resize(n_codebook);
  for (uint64_t k = 0; k < n_codebook; ++k)
    ckpt.codebook[k] = take_f32(in, path);

  require_data(in.peek() == std::char_traits<char>::eof(), path,
               ": trailing bytes after checkpoint data");
  return ckpt;
}

namespace {

// Overwrites a freshly built model's weights from checkpoint blobs; shape
// and name sets must agree exactly.
template <typename T>
void apply_checkpoint_state(PretrainModel<T>& model, const Checkpoint& ckpt) {
  std::vector<ParamRef<T>> params = model.parameters();
  require_data(params.size() == ckpt.weights.size(), "checkpoint carries ",
               ckpt.weights.size(), " weights, model has ", params.size());
  std::unordered_map<std::string, const Checkpoint::Blob*> by_name;
  for (const Checkpoint::Blob& blob : ckpt.weights)
    require_data(by_name.emplace(blob.name, &blob).second,
                 "checkpoint has duplicate weight ", blob.name);
  for (ParamRef<T>& p : params) {
    auto it = by_name.find(p.name);
    require_data(it != by_name.end(), "checkpoint is missing weight ", p.name);
    const Checkpoint::Blob& blob = *it->second;
    require_data(blob.dims == p.tensor->shape(), "checkpoint weight ", p.name,
                 " has shape ", shape_to_string(blob.dims), ", model expects ",
                 shape_to_string(p.tensor->shape()));
    std::vector<T> values(blob.values.begin(), blob.values.end());
    p.tensor->overwrite_values(values);
  }
  if (const Codebook* codebook = model.codebook()) {
    const std::span<const float> protos = codebook->prototypes();
    require_data(ckpt.codebook.size() == protos.size() &&
                     std::memcmp(ckpt.codebook.data(), protos.data(),
                                 protos.size() * sizeof(float)) == 0,
                 "checkpoint codebook does not match the configured seed");
  } else {
    require_data(ckpt.codebook.empty(),
                 "checkpoint carries a codebook but the model has none");
  }
}

}  // namespace

template <typename T>
PretrainModel<T> model_from_checkpoint(const Checkpoint& ckpt) {
  PretrainModel<T> model(ckpt.config.model,
                         Rng(ckpt.config.train.seed).child("model"));
  apply_checkpoint_state(model, ckpt);
  return model;
}

// ---- Fit loop ---------------------------------------------------------------------

FitResult fit_loop(FitDriver& driver, int epochs, int first_epoch) {
  require(first_epoch >= 1, "fit_loop: first_epoch must be >= 1, got ",
          first_epoch);
  require(epochs >= first_epoch - 1, "fit_loop: nothing to run before epoch ",
          first_epoch);
  FitResult result;
  result.last_epoch = first_epoch - 1;
  double best = std::numeric_limits<double>::infinity();
  for (int epoch = first_epoch; epoch <= epochs; ++epoch) {
    const double train_loss = driver.train_epoch(epoch);
    const double val_loss = driver.validation_loss(epoch);
    result.curve.push_back(EpochPoint{epoch, train_loss, val_loss});
    const bool is_best = val_loss < best;
    if (is_best) {
      best = val_loss;
      result.best_epoch = epoch;
      result.best_val_loss = val_loss;
    }
    driver.snapshot(epoch, train_loss, val_loss, is_best);
    result.last_epoch = epoch;
  }
  return result;
}

void write_curve_csv(std::ostream& out, const std::vector<EpochPoint>& curve) {
  out << "epoch,train_loss,val_loss\n";
  for (const EpochPoint& p : curve) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", p.epoch, p.train_loss,
                  p.val_loss);
    out << buf;
  }
}

// ---- Trainer ----------------------------------------------------------------------

namespace {

RunConfig finalized(RunConfig cfg) {
  finalize_run_config(cfg);
  return cfg;
}

}  // namespace

template <typename T>
Trainer<T>::Trainer(const RunConfig& cfg, const Corpus& corpus)
    : cfg_(finalized(cfg)),
      split_(split_train_validation(corpus, cfg_.train.val_fraction)),
      model_(cfg_.model, Rng(cfg_.train.seed).child("model")),
      optimizer_(model_.parameters(), cfg_.train) {}

template <typename T>
Trainer<T>::Trainer(const RunConfig& cfg, const Corpus& corpus,
                    const Checkpoint& resume)
    : Trainer(cfg, corpus) {
  // The epoch budget may grow on resume; everything else must match, or the
  // continued trajectory would silently diverge from the original run.
  RunConfig recorded = resume.config;
  recorded.train.epochs = cfg_.train.epochs;
  require_data(serialize_run_config(recorded) == serialize_run_config(cfg_),
               "resume checkpoint was written under a different configuration");
  require_data(!resume.moments.empty(),
               "resume checkpoint carries no optimizer state");
  apply_checkpoint_state(model_, resume);
  optimizer_.restore(resume.opt_steps, resume.moments);
  first_epoch_ = resume.epoch + 1;
}

template <typename T>
double Trainer<T>::train_epoch(int epoch) {
  const std::vector<std::vector<int>> batches =
      make_batches(static_cast<int>(split_.train.size()),
                   cfg_.train.batch_size);
  double sum = 0.0;
  for (size_t b = 0; b < batches.size(); ++b) {
    std::vector<const Utterance*> batch;
    for (int i : batches[b]) batch.push_back(split_.train[i]);
    Rng rng = Rng(cfg_.train.seed)
                  .child("epoch")
                  .child(epoch)
                  .child("batch")
                  .child(static_cast<uint64_t>(b));
    double value = 0.0;
    try {
      const Tensor<T> loss = model_.batch_loss(batch, rng);
      value = static_cast<double>(loss.scalar());
      require_numeric(std::isfinite(value), "non-finite training loss");
      backward(loss);
    } catch (const NumericalError& e) {
      // A long run must name the batch that broke, not just the symptom.
      throw NumericalError(internal::format_message("epoch ", epoch, " batch ",
                                                    b, ": ", e.what()));
    }
    optimizer_.step();
    sum += value;
  }
  return sum / static_cast<double>(batches.size());
}

template <typename T>
double Trainer<T>::validation_loss(int epoch) {
  const std::vector<std::vector<int>> batches = make_batches(
      static_cast<int>(split_.validation.size()), cfg_.train.batch_size);
  double sum = 0.0;
  for (size_t b = 0; b < batches.size(); ++b) {
    std::vector<const Utterance*> batch;
    for (int i : batches[b]) batch.push_back(split_.validation[i]);
    Rng rng = Rng(cfg_.train.seed)
                  .child("val")
                  .child(epoch)
                  .child(static_cast<uint64_t>(b));
    double value = 0.0;
    try {
      value = static_cast<double>(model_.batch_loss(batch, rng).scalar());
      require_numeric(std::isfinite(value), "non-finite validation loss");
    } catch (const NumericalError& e) {
      throw NumericalError(internal::format_message("epoch ", epoch,
                                                    " val batch ", b, ": ",
                                                    e.what()));
    }
    sum += value;
  }
  return sum / static_cast<double>(batches.size());
}

template <typename T>
void Trainer<T>::snapshot(int epoch, double /*train_loss*/, double val_loss,
                          bool is_best) {
  last_ = make_checkpoint(epoch, val_loss);
  if (is_best) best_ = *last_;
  if (on_snapshot) on_snapshot(*last_, is_best);
}

template <typename T>
FitResult Trainer<T>::fit() {
  return fit_loop(*this, cfg_.train.epochs, first_epoch_);
}

template <typename T>
Checkpoint Trainer<T>::make_checkpoint(int epoch, double val_loss) {
  Checkpoint ckpt;
  ckpt.config = cfg_;
  ckpt.epoch = epoch;
  ckpt.val_loss = val_loss;
  ckpt.opt_steps = optimizer_.steps();
  for (ParamRef<T>& p : model_.parameters()) {
    Checkpoint::Blob blob;
    blob.name = p.name;
    blob.dims = p.tensor->shape();
    const std::span<const T> values = p.tensor->value();
    blob.values.assign(values.begin(), values.end());
    ckpt.weights.push_back(std::move(blob));
  }
  ckpt.moments = optimizer_.slots();
  if (const Codebook* codebook = model_.codebook()) {
    const std::span<const float> protos = codebook->prototypes();
    ckpt.codebook.assign(protos.begin(), protos.end());
  }
  return ckpt;
}

template <typename T>
const Checkpoint* Trainer<T>::best() const {
  return best_ ? &*best_ : nullptr;
}

template <typename T>
const Checkpoint* Trainer<T>::last() const {
  return last_ ? &*last_ : nullptr;
}

// ---- Extraction -------------------------------------------------------------------

template <typename T>
Representation extract_representation(const PretrainModel<T>& model,
                                      const Utterance& utterance) {
  const Tensor<T> c = model.context(utterance.samples);
  Representation rep;
  rep.frames = c.dim(0);
  rep.dim = c.dim(1);
  const std::span<const T> values = c.value();
  rep.values.assign(values.begin(), values.end());
  return rep;
}

// ---- Instantiations ---------------------------------------------------------------

template class AdamOptimizer<float>;
template class AdamOptimizer<double>;
template class PretrainModel<float>;
template class PretrainModel<double>;
template class Trainer<float>;
template class Trainer<double>;
template PretrainModel<float> model_from_checkpoint<float>(const Checkpoint&);
template PretrainModel<double> model_from_checkpoint<double>(const Checkpoint&);
template Representation extract_representation<float>(
    const PretrainModel<float>&, const Utterance&);
template Representation extract_representation<double>(
    const PretrainModel<double>&, const Utterance&);

}  // namespace ctxpre
