// tests/trainer_test.cc

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

#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ctxpre/common.h"
#include "ctxpre/config.h"
#include "ctxpre/objectives.h"
#include "ctxpre/rng.h"
#include "ctxpre/trainer.h"

using namespace ctxpre;
using doctest::Approx;

namespace {

// A small architecture that keeps every fit under a second: two conv layers
// with total stride 2, one attention layer of width 3 over 8 channels.
RunConfig tiny_run(Objective objective) {
  RunConfig cfg = default_run_config(objective);
  cfg.model.encoder.kernels = {4, 3};
  cfg.model.encoder.strides = {2, 1};
  cfg.model.encoder.channels = 8;
  cfg.model.ar.layers = 1;
  cfg.model.ar.layer.attention.heads = 2;
  cfg.model.ar.layer.attention.width = 3;
  cfg.model.ar.layer.ff_hidden = 6;
  cfg.model.ar.final_dim = 8;
  cfg.model.predictor.steps = 2;
  cfg.model.negatives = 8;
  cfg.model.features.n_mels = 8;
  cfg.model.bestrq.codebook_size = 16;
  cfg.model.bestrq.mask_prob = 0.2;
  cfg.model.bestrq.mask_span = 2;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 2;
  cfg.train.seed = 7;
  cfg.train.val_fraction = 0.3;
  finalize_run_config(cfg);
  return cfg;
}

// Sine utterances with a touch of noise: periodic enough that a tiny
// contrastive model can visibly improve within a few epochs.
Corpus tiny_corpus(int n_train, int n_samples = 480) {
  Corpus corpus;
  Rng rng(123);
  for (int i = 0; i < n_train; ++i) {
    Utterance utt;
    utt.id = "trn" + std::to_string(i);
    utt.speaker = "s" + std::to_string(i % 2);
    utt.subset = "train";
    Rng r = rng.child(i);
    utt.samples.resize(n_samples);
    const double freq = 180.0 * (i + 1);
    for (int t = 0; t < n_samples; ++t)
      utt.samples[t] = static_cast<float>(
          0.3 * std::sin(2.0 * 3.14159265358979 * freq * t / 16000.0) +
          0.02 * r.normal());
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

template <typename T>
std::vector<T> weight_values(PretrainModel<T>& model) {
  std::vector<T> out;
  for (ParamRef<T>& p : model.parameters()) {
    const std::span<const T> v = p.tensor->value();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::string temp_path(const std::string& name) {
  return std::string("./trainer_test_") + name;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("batches group indices in input order") {
  const std::vector<std::vector<int>> batches = make_batches(25, 12);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 12);
  CHECK(batches[1].size() == 12);
  CHECK(batches[2].size() == 1);
  int expect = 0;
  for (const std::vector<int>& batch : batches)
    for (int i : batch) CHECK(i == expect++);
  CHECK(expect == 25);

  CHECK(make_batches(5, 5).size() == 1);
  CHECK(make_batches(5, 100).size() == 1);
  CHECK_THROWS_AS(make_batches(0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_batches(4, 0), std::invalid_argument);
}

TEST_CASE("the validation split is the tail of the training subset") {
  Corpus corpus;
  for (int i = 0; i < 12; ++i) {
    Utterance utt;
    utt.id = "u" + std::to_string(i);
    utt.subset = i % 6 == 5 ? "dev-clean" : "train";
    utt.samples.assign(480, 0.1f);
    corpus.utterances.push_back(std::move(utt));
  }
  // 10 train utterances; 5% rounds up to one held out.
  const CorpusSplit split = split_train_validation(corpus, 0.05);
  CHECK(split.train.size() == 9);
  CHECK(split.validation.size() == 1);
  CHECK(split.validation[0]->id == "u10");
  for (const Utterance* utt : split.train) CHECK(utt->subset == "train");

  // 25% of 10 rounds to 3.
  const CorpusSplit quarter = split_train_validation(corpus, 0.25);
  CHECK(quarter.train.size() == 7);
  CHECK(quarter.validation.size() == 3);

  Corpus single;
  single.utterances.push_back(corpus.utterances[0]);
  CHECK_THROWS_AS(split_train_validation(single, 0.05), DataError);

  Corpus two;
  two.utterances.push_back(corpus.utterances[0]);
  two.utterances.push_back(corpus.utterances[1]);
  CHECK_THROWS_AS(split_train_validation(two, 0.95), DataError);
}

TEST_CASE("adam follows the reference update") {
  Tensor<double> w = Tensor<double>::from_values({2}, {1.0, 2.0});
  w.set_requires_grad(true);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.beta1 = 0.5;
  cfg.beta2 = 0.75;
  cfg.epsilon = 1e-8;
  cfg.clip_norm = 0.0;
  AdamOptimizer<double> opt({{"w", &w}}, cfg);

  const std::vector<std::vector<double>> grads = {
      {0.3, -0.2}, {-0.1, 0.4}, {0.05, 0.0}};
  double m[2] = {0.0, 0.0}, v[2] = {0.0, 0.0}, x[2] = {1.0, 2.0};
  for (int s = 1; s <= 3; ++s) {
    w.seed_grad(grads[s - 1]);
    opt.step();
    for (int k = 0; k < 2; ++k) {
      const double g = grads[s - 1][k];
      m[k] = 0.5 * m[k] + 0.5 * g;
      v[k] = 0.75 * v[k] + 0.25 * g * g;
      const double mh = m[k] / (1.0 - std::pow(0.5, s));
      const double vh = v[k] / (1.0 - std::pow(0.75, s));
      x[k] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(w.value()[k] == Approx(x[k]).epsilon(1e-12));
    }
  }
  CHECK(opt.steps() == 3);
  for (double g : w.grad_or_zeros()) CHECK(g == 0.0);
}

TEST_CASE("clipping rescales the global gradient norm across parameters") {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;  // freeze weights; observe the moments
  cfg.beta1 = 0.0;          // first moment == the clipped gradient
  cfg.beta2 = 0.0;
  cfg.clip_norm = 2.5;

  Tensor<double> a = Tensor<double>::from_values({1}, {0.0});
  Tensor<double> b = Tensor<double>::from_values({1}, {0.0});
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  AdamOptimizer<double> opt({{"a", &a}, {"b", &b}}, cfg);

  // Norm of (3, 4) is 5, over the cap: both gradients shrink by half.
  a.seed_grad(std::vector<double>{3.0});
  b.seed_grad(std::vector<double>{4.0});
  opt.step();
  CHECK(opt.slots()[0].m[0] == Approx(1.5).epsilon(1e-15));
  CHECK(opt.slots()[1].m[0] == Approx(2.0).epsilon(1e-15));

  // A norm under the cap passes through untouched.
  a.seed_grad(std::vector<double>{0.3});
  b.seed_grad(std::vector<double>{0.4});
  opt.step();
  CHECK(opt.slots()[0].m[0] == Approx(0.3).epsilon(1e-15));

  // clip_norm = 0 disables clipping entirely.
  cfg.clip_norm = 0.0;
  Tensor<double> c = Tensor<double>::from_values({1}, {0.0});
  c.set_requires_grad(true);
  AdamOptimizer<double> unclipped({{"c", &c}}, cfg);
  c.seed_grad(std::vector<double>{30.0});
  unclipped.step();
  CHECK(unclipped.slots()[0].m[0] == Approx(30.0).epsilon(1e-15));
}

TEST_CASE("fit loop keeps the lowest-validation epoch") {
  struct StubDriver : FitDriver {
    std::vector<double> vals;
    std::vector<bool> flags;
    double train_epoch(int) override { return 0.0; }
    double validation_loss(int epoch) override { return vals[epoch - 1]; }
    void snapshot(int, double, double, bool is_best) override {
      flags.push_back(is_best);
    }
  };

  StubDriver driver;
  driver.vals = {3.0, 1.0, 2.0};
  const FitResult result = fit_loop(driver, 3);
  CHECK(result.best_epoch == 2);
  CHECK(result.best_val_loss == 1.0);
  CHECK(result.last_epoch == 3);
  REQUIRE(result.curve.size() == 3);
  CHECK(result.curve[1].val_loss == 1.0);
  REQUIRE(driver.flags.size() == 3);
  CHECK(driver.flags[0]);
  CHECK(driver.flags[1]);
  CHECK(!driver.flags[2]);

  // Ties keep the earlier epoch.
  StubDriver tie;
  tie.vals = {2.0, 2.0};
  CHECK(fit_loop(tie, 2).best_epoch == 1);

  // An already-finished run is a no-op, not an error.
  StubDriver done;
  done.vals = {1.0};
  const FitResult empty = fit_loop(done, 1, 2);
  CHECK(empty.curve.empty());
  CHECK(empty.last_epoch == 1);
  CHECK_THROWS_AS(fit_loop(done, 1, 3), std::invalid_argument);
}

TEST_CASE("curves serialize as csv") {
  std::ostringstream out;
  write_curve_csv(out, {{1, 0.5, 0.25}, {2, 0.125, 2.0}});
  CHECK(out.str() ==
        "epoch,train_loss,val_loss\n"
        "1,0.5,0.25\n"
        "2,0.125,2\n");
}

TEST_CASE("a zero learning rate leaves the weights untouched") {
  RunConfig cfg = tiny_run(Objective::kCpc);
  cfg.train.learning_rate = 0.0;
  cfg.train.epochs = 1;
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  const std::vector<float> before = weight_values(trainer.model());
  const double loss = trainer.train_epoch(1);
  CHECK(std::isfinite(loss));
  const std::vector<float> after = weight_values(trainer.model());
  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const RunConfig cfg = tiny_run(Objective::kCpc);
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> one(cfg, corpus);
  Trainer<float> two(cfg, corpus);
  const FitResult r1 = one.fit();
  const FitResult r2 = two.fit();
  REQUIRE(r1.curve.size() == r2.curve.size());
  for (size_t i = 0; i < r1.curve.size(); ++i) {
    CHECK(r1.curve[i].train_loss == r2.curve[i].train_loss);
    CHECK(r1.curve[i].val_loss == r2.curve[i].val_loss);
  }
  const std::vector<float> w1 = weight_values(one.model());
  const std::vector<float> w2 = weight_values(two.model());
  REQUIRE(w1.size() == w2.size());
  for (size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == w2[i]);
}

TEST_CASE("an untrained contrastive model scores near the candidate-count ceiling") {
  const RunConfig cfg = tiny_run(Objective::kCpc);  // negatives = 8
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  const double loss = trainer.validation_loss(1);
  const double ceiling = std::log(8.0);
  CHECK(std::abs(loss - ceiling) < 0.1 * ceiling);
}

TEST_CASE("validation never touches the weights") {
  const RunConfig cfg = tiny_run(Objective::kCpc);
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  const std::vector<float> before = weight_values(trainer.model());
  const double v1 = trainer.validation_loss(3);
  const double v2 = trainer.validation_loss(3);
  CHECK(v1 == v2);  // same epoch, same draws
  const std::vector<float> after = weight_values(trainer.model());
  for (size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("a few epochs cut the training loss on a tiny corpus") {
  RunConfig cfg = tiny_run(Objective::kCpc);
  cfg.train.epochs = 30;
  cfg.train.learning_rate = 5e-3;
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  const FitResult result = trainer.fit();
  const double first = result.curve.front().train_loss;
  const double last = result.curve.back().train_loss;
  CHECK(last < 0.8 * first);
}

TEST_CASE("a poisoned weight aborts with the failing batch named") {
  const RunConfig cfg = tiny_run(Objective::kCpc);
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  std::vector<ParamRef<float>> params = trainer.model().parameters();
  const std::vector<float> poison(
      static_cast<size_t>(params[0].tensor->numel()),
      std::numeric_limits<float>::quiet_NaN());
  params[0].tensor->overwrite_values(poison);
  CHECK_THROWS_WITH_AS(trainer.train_epoch(1),
                       doctest::Contains("epoch 1 batch 0"), NumericalError);
}

TEST_CASE("masked batches weight utterances by their scored frames") {
  RunConfig cfg = tiny_run(Objective::kBestRq);
  const Rng model_rng = Rng(cfg.train.seed).child("model");
  PretrainModel<float> facade(cfg.model, model_rng);
  BestRqModel<float> direct(cfg.model, model_rng);

  Corpus corpus = tiny_corpus(2);
  corpus.utterances[1].samples.resize(800, 0.05f);  // 5 frames vs 3
  const Utterance* u1 = &corpus.utterances[0];
  const Utterance* u2 = &corpus.utterances[1];

  Rng direct_rng(42);
  const BestRqForward<float> f1 = direct.forward(u1->samples, direct_rng);
  const BestRqForward<float> f2 = direct.forward(u2->samples, direct_rng);
  const double l1 = bestrq_loss(f1.logits, f1.targets, f1.mask, false).scalar();
  const double l2 = bestrq_loss(f2.logits, f2.targets, f2.mask, false).scalar();
  const double n1 = static_cast<double>(f1.mask.size());
  const double n2 = static_cast<double>(f2.mask.size());
  const double expected = (n1 * l1 + n2 * l2) / (n1 + n2);

  Rng batch_rng(42);
  const double got = facade.batch_loss({u1, u2}, batch_rng).scalar();
  CHECK(got == Approx(expected).epsilon(1e-6));
}

TEST_CASE("masked training runs and starts near the uniform ceiling") {
  RunConfig cfg = tiny_run(Objective::kBestRq);
  cfg.train.epochs = 1;
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  const double init = trainer.validation_loss(1);
  // Random logits keep the cross-entropy within a factor of the uniform
  // value ln 16; this is a sanity bound, not a sharp identity.
  CHECK(init > 0.5 * std::log(16.0));
  CHECK(init < 2.0 * std::log(16.0));
  const FitResult result = trainer.fit();
  CHECK(result.curve.size() == 1);
  CHECK(std::isfinite(result.curve[0].train_loss));
}

TEST_CASE("checkpoints round-trip bit for bit") {
  RunConfig cfg = tiny_run(Objective::kCpc);
  cfg.train.epochs = 1;
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  trainer.fit();
  REQUIRE(trainer.last() != nullptr);
  const Checkpoint& ckpt = *trainer.last();

  const std::string path = temp_path("roundtrip.ckpt");
  save_checkpoint(path, ckpt);
  const Checkpoint back = load_checkpoint(path);

  CHECK(serialize_run_config(back.config) == serialize_run_config(ckpt.config));
  CHECK(back.epoch == ckpt.epoch);
  CHECK(back.val_loss == ckpt.val_loss);
  CHECK(back.opt_steps == ckpt.opt_steps);
  REQUIRE(back.weights.size() == ckpt.weights.size());
  for (size_t i = 0; i < ckpt.weights.size(); ++i) {
    CHECK(back.weights[i].name == ckpt.weights[i].name);
    CHECK(back.weights[i].dims == ckpt.weights[i].dims);
    REQUIRE(back.weights[i].values.size() == ckpt.weights[i].values.size());
    for (size_t k = 0; k < ckpt.weights[i].values.size(); ++k)
      CHECK(back.weights[i].values[k] == ckpt.weights[i].values[k]);
  }
  REQUIRE(back.moments.size() == ckpt.moments.size());
  for (size_t i = 0; i < ckpt.moments.size(); ++i) {
    CHECK(back.moments[i].name == ckpt.moments[i].name);
    CHECK(back.moments[i].m == ckpt.moments[i].m);
    CHECK(back.moments[i].v == ckpt.moments[i].v);
  }
  CHECK(back.codebook.empty());

  // The restored model reproduces the original representations exactly.
  PretrainModel<float> restored = model_from_checkpoint<float>(back);
  const Representation a =
      extract_representation(trainer.model(), corpus.utterances[0]);
  const Representation b =
      extract_representation(restored, corpus.utterances[0]);
  CHECK(a.frames == b.frames);
  CHECK(a.dim == b.dim);
  REQUIRE(a.values.size() == b.values.size());
  for (size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint files reject corruption") {
  RunConfig cfg = tiny_run(Objective::kCpc);
  cfg.train.epochs = 1;
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  const Checkpoint ckpt = trainer.make_checkpoint(0, 0.0);
  const std::string path = temp_path("corrupt.ckpt");
  save_checkpoint(path, ckpt);

  std::ifstream in(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  in.close();

  auto write_bytes = [&](const std::vector<char>& b) {
    std::ofstream out(path, std::ios::binary);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  std::vector<char> truncated(bytes.begin(), bytes.end() - 7);
  write_bytes(truncated);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  std::vector<char> wrong_magic = bytes;
  wrong_magic[0] = 'Z';
  write_bytes(wrong_magic);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  std::vector<char> trailing = bytes;
  trailing.push_back(1);
  write_bytes(trailing);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), DataError);
  std::remove(path.c_str());
}

TEST_CASE("masked checkpoints carry the codebook and verify it on load") {
  RunConfig cfg = tiny_run(Objective::kBestRq);
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  Checkpoint ckpt = trainer.make_checkpoint(0, 0.0);
  const Codebook* codebook = trainer.model().codebook();
  REQUIRE(codebook != nullptr);
  CHECK(ckpt.codebook.size() == codebook->prototypes().size());

  PretrainModel<float> restored = model_from_checkpoint<float>(ckpt);
  CHECK(restored.codebook() != nullptr);

  ckpt.codebook[0] += 1.0f;
  CHECK_THROWS_WITH_AS(model_from_checkpoint<float>(ckpt),
                       doctest::Contains("codebook"), DataError);
}

TEST_CASE("a resumed run reproduces the unresumed curve") {
  RunConfig full = tiny_run(Objective::kCpc);
  full.train.epochs = 4;
  const Corpus corpus = tiny_corpus(5);

  Trainer<float> straight(full, corpus);
  const FitResult whole = straight.fit();

  RunConfig half = full;
  half.train.epochs = 2;
  Trainer<float> partial(half, corpus);
  partial.fit();
  REQUIRE(partial.last() != nullptr);
  const Checkpoint middle = *partial.last();

  Trainer<float> resumed(full, corpus, middle);
  CHECK(resumed.first_epoch() == 3);
  const FitResult rest = resumed.fit();
  REQUIRE(rest.curve.size() == 2);
  CHECK(rest.curve[0].epoch == 3);
  CHECK(rest.curve[0].train_loss == whole.curve[2].train_loss);
  CHECK(rest.curve[0].val_loss == whole.curve[2].val_loss);
  CHECK(rest.curve[1].train_loss == whole.curve[3].train_loss);
  CHECK(rest.curve[1].val_loss == whole.curve[3].val_loss);

  const std::vector<float> w1 = weight_values(straight.model());
  const std::vector<float> w2 = weight_values(resumed.model());
  REQUIRE(w1.size() == w2.size());
  for (size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == w2[i]);
}

TEST_CASE("resume rejects a checkpoint from a different configuration") {
  RunConfig cfg = tiny_run(Objective::kCpc);
  const Corpus corpus = tiny_corpus(4);
  Trainer<float> trainer(cfg, corpus);
  trainer.fit();
  const Checkpoint ckpt = *trainer.last();

  RunConfig other = cfg;
  other.model.ar.layer.attention.width = 5;
  finalize_run_config(other);
  CHECK_THROWS_WITH_AS(
      (Trainer<float>(other, corpus, ckpt)),
      doctest::Contains("different configuration"), DataError);

  // Extending only the epoch budget is the expected resume path.
  RunConfig longer = cfg;
  longer.train.epochs = 5;
  Trainer<float> extended(longer, corpus, ckpt);
  CHECK(extended.first_epoch() == 3);
}

TEST_CASE("extraction writes one row per frame at the exported width") {
  const RunConfig cfg = tiny_run(Objective::kCpc);
  const Corpus corpus = tiny_corpus(2);
  Trainer<float> trainer(cfg, corpus);
  const Utterance& utt = corpus.utterances[0];
  const Representation rep = extract_representation(trainer.model(), utt);
  CHECK(rep.frames ==
        cfg.model.frames_for(static_cast<int64_t>(utt.samples.size())));
  CHECK(rep.dim == cfg.model.representation_dim());

  const std::string path = temp_path("extract.rep");
  write_rep_file(path, rep);
  const Representation back = read_rep_file(path);
  CHECK(back.frames == rep.frames);
  REQUIRE(back.values.size() == rep.values.size());
  for (size_t i = 0; i < rep.values.size(); ++i)
    CHECK(back.values[i] == rep.values[i]);
  std::remove(path.c_str());
}

}  // TEST_SUITE("trainer")
