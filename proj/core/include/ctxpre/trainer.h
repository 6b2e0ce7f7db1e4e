// core/include/ctxpre/trainer.h

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

#ifndef CTXPRE_TRAINER_H_
#define CTXPRE_TRAINER_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxpre/abx.h"
#include "ctxpre/config.h"
#include "ctxpre/corpus.h"
#include "ctxpre/model.h"

namespace ctxpre {

// ---- Batching and splits -------------------------------------------------------

// Consecutive index groups of batch_size in input order; the final group
// holds the remainder.  Batch composition never depends on the seed.
std::vector<std::vector<int>> make_batches(int n_items, int batch_size);

// Training pool = utterances with subset "train", in corpus order; the
// validation split is the tail max(1, round(n * val_fraction)) of the pool.
// Both splits must end up non-empty.
struct CorpusSplit {
  std::vector<const Utterance*> train;
  std::vector<const Utterance*> validation;
};
CorpusSplit split_train_validation(const Corpus& corpus, double val_fraction);

// ---- Optimizer --------------------------------------------------------------------

// Per-parameter Adam moments, in double regardless of the weight type.
struct OptimizerSlot {
  std::string name;
  std::vector<double> m;
  std::vector<double> v;
};

// Adam with optional global-gradient-norm clipping; step() consumes and
// zeroes the accumulated gradients.
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<ParamRef<T>> params, const TrainConfig& cfg);

  void step();
  int64_t steps() const { return steps_; }

  // Checkpoint access: slots are aligned with the parameter list.
  const std::vector<OptimizerSlot>& slots() const { return slots_; }
  void restore(int64_t steps, const std::vector<OptimizerSlot>& slots);

 private:
  std::vector<ParamRef<T>> params_;
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  double clip_norm_;
  int64_t steps_ = 0;
  std::vector<OptimizerSlot> slots_;
};

// ---- Model facade ----------------------------------------------------------------

// One handle over both architectures so the training loop, checkpoints and
// extraction never branch on the objective.
template <typename T>
class PretrainModel {
 public:
  PretrainModel(const ModelConfig& cfg, const Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  std::vector<ParamRef<T>> parameters();
  void set_trainable(bool trainable);
  void set_attention_width(int width);
  PretrainModel clone() const;

  // Differentiable loss over a batch of utterances.  `rng` drives negative
  // sampling (contrastive) or mask placement (masked prediction) and is
  // consumed in utterance order.  Contrastive batches share one candidate
  // pool across utterances; masked batches average per-utterance losses
  // weighted by their scored frame counts.
  Tensor<T> batch_loss(const std::vector<const Utterance*>& batch,
                       Rng& rng) const;

  // Exported representation c = g_ar(features(audio)), one row per frame.
  Tensor<T> context(std::span<const float> audio) const;

  // Frozen quantizer, present only for masked prediction.
  const Codebook* codebook() const;

 private:
  PretrainModel() = default;
  ModelConfig cfg_;
  std::optional<CpcModel<T>> cpc_;
  std::optional<BestRqModel<T>> bestrq_;
};

// ---- Checkpoints -----------------------------------------------------------------

// Versioned container: run configuration text, fit position, weights, Adam
// moments, and the frozen codebook when one exists.  All integers and
// floats little-endian.
inline constexpr char kCheckpointMagic[] = "ctxpre-ckpt";
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  int epoch = 0;          // epochs completed when the snapshot was taken
  double val_loss = 0.0;
  int64_t opt_steps = 0;

  struct Blob {
    std::string name;
    std::vector<int> dims;
    std::vector<float> values;
  };
  std::vector<Blob> weights;
  std::vector<OptimizerSlot> moments;  // empty if saved without an optimizer
  std::vector<float> codebook;         // prototypes, row-major
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);  // throws DataError

// Rebuilds the model a checkpoint describes and overwrites its weights.
// The checkpoint must carry exactly the parameters the configuration
// produces, and a stored codebook must match the one the seed regenerates.
template <typename T>
PretrainModel<T> model_from_checkpoint(const Checkpoint& ckpt);

// ---- Fit loop ---------------------------------------------------------------------

struct EpochPoint {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct FitResult {
  std::vector<EpochPoint> curve;
  int best_epoch = 0;  // lowest validation loss; ties keep the earlier epoch
  double best_val_loss = 0.0;
  int last_epoch = 0;
};

// One training round: the driver owns the model and the data.
class FitDriver {
 public:
  virtual ~FitDriver() = default;
  virtual double train_epoch(int epoch) = 0;
  virtual double validation_loss(int epoch) = 0;
  virtual void snapshot(int epoch, double train_loss, double val_loss,
                        bool is_best) = 0;
};

// Runs epochs [first_epoch, epochs], validating and snapshotting after each.
FitResult fit_loop(FitDriver& driver, int epochs, int first_epoch = 1);

// `epoch,train_loss,val_loss` lines, one per point, with a header row.
void write_curve_csv(std::ostream& out, const std::vector<EpochPoint>& curve);

// ---- Trainer ----------------------------------------------------------------------

// Batches are deterministic; all randomness comes from per-epoch streams of
// the run seed, so a run resumed from epoch e reproduces the unresumed
// curve bit for bit (the optimizer moments travel in the checkpoint).
template <typename T>
class Trainer : public FitDriver {
 public:
  // `corpus` must outlive the trainer.  The resume form restores weights,
  // moments and the epoch position from the checkpoint; its configuration
  // must match except for the epoch budget, which a resume may extend.
  Trainer(const RunConfig& cfg, const Corpus& corpus);
  Trainer(const RunConfig& cfg, const Corpus& corpus,
          const Checkpoint& resume);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  double train_epoch(int epoch) override;       // mean batch loss
  double validation_loss(int epoch) override;   // never touches weights
  void snapshot(int epoch, double train_loss, double val_loss,
                bool is_best) override;

  // Runs fit_loop over the configured epochs, continuing after a resume.
  FitResult fit();

  // Invoked by snapshot(); hook for persistence.
  std::function<void(const Checkpoint&, bool is_best)> on_snapshot;

  Checkpoint make_checkpoint(int epoch, double val_loss);
  const Checkpoint* best() const;  // null before the first snapshot
  const Checkpoint* last() const;

  PretrainModel<T>& model() { return model_; }
  const PretrainModel<T>& model() const { return model_; }
  const CorpusSplit& split() const { return split_; }
  int first_epoch() const { return first_epoch_; }

 private:
  RunConfig cfg_;
  CorpusSplit split_;
  PretrainModel<T> model_;
  AdamOptimizer<T> optimizer_;
  int first_epoch_ = 1;
  std::optional<Checkpoint> best_;
  std::optional<Checkpoint> last_;
};

// ---- Extraction -------------------------------------------------------------------

// The exported representation of one utterance as a writable matrix.
template <typename T>
Representation extract_representation(const PretrainModel<T>& model,
                                      const Utterance& utterance);

}  // namespace ctxpre

#endif  // CTXPRE_TRAINER_H_
