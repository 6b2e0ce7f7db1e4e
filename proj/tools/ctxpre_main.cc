// tools/ctxpre_main.cc

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

// Operator surface: synthesize a corpus, pre-train, extract representations,
// run the phone-discriminability evaluation, and run the self-check suites.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "ctxpre/abx.h"
#include "ctxpre/common.h"
#include "ctxpre/config.h"
#include "ctxpre/corpus.h"
#include "ctxpre/threading.h"
#include "ctxpre/trainer.h"
#include "ctxpre/verify.h"

namespace fs = std::filesystem;
using namespace ctxpre;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require_data(out.good(), "cannot open ", path, " for writing");
  out << text;
  out.flush();
  require_data(out.good(), "failed writing ", path);
}

// Every command that produces artifacts drops the effective configuration
// next to them, so a run is reproducible from the directory alone.
void echo_config(const RunConfig& cfg, const std::string& out_dir) {
  write_text_file(out_dir + "/config.txt", serialize_run_config(cfg));
}

// ---- config assembly --------------------------------------------------------

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.path,
                  "run configuration file; flags override its keys");
  cmd->add_option("--set", args.sets,
                  "override one key, as section.key=value (repeatable)")
      ->type_size(1);
}

using Overrides = std::vector<std::pair<std::string, std::string>>;

RunConfig build_config(const ConfigArgs& args, const Overrides& sugar) {
  RunConfig cfg = args.path.empty() ? default_run_config(Objective::kCpc)
                                    : load_run_config(args.path);
  for (const auto& [key, value] : sugar) apply_config_override(cfg, key, value);
  for (const std::string& entry : args.sets) {
    const size_t eq = entry.find('=');
    require(eq != std::string::npos && eq > 0,
            "--set expects section.key=value, got '", entry, "'");
    apply_config_override(cfg, entry.substr(0, eq), entry.substr(eq + 1));
  }
  finalize_run_config(cfg);
  return cfg;
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
  ConfigArgs config;
  std::string out_dir;
  uint64_t seed = 0;
  int phones = 0;
  int speakers = 0;
  double minutes = 0.0;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_phones = nullptr;
  CLI::Option* o_speakers = nullptr;
  CLI::Option* o_minutes = nullptr;
};

int run_synth(const SynthArgs& a) {
  Overrides sugar;
  if (a.o_seed->count()) sugar.push_back({"synth.seed", std::to_string(a.seed)});
  if (a.o_phones->count())
    sugar.push_back({"synth.phones", std::to_string(a.phones)});
  if (a.o_speakers->count())
    sugar.push_back({"synth.speakers", std::to_string(a.speakers)});
  if (a.o_minutes->count())
    sugar.push_back({"synth.minutes", num(a.minutes)});
  const RunConfig cfg = build_config(a.config, sugar);

  const Corpus corpus = synth_corpus(cfg.synth);
  fs::create_directories(a.out_dir);
  save_corpus(corpus, a.out_dir);
  echo_config(cfg, a.out_dir);

  double seconds = 0.0;
  for (const Utterance& u : corpus.utterances) seconds += u.duration_s();
  std::cout << "wrote " << corpus.utterances.size() << " utterances, "
            << corpus.alignments.size() << " aligned phones, "
            << std::fixed << std::setprecision(1) << seconds / 60.0
            << " minutes to " << a.out_dir << "\n";
  return 0;
}

// ---- pretrain ------------------------------------------------------------------

struct PretrainArgs {
  ConfigArgs config;
  std::string corpus_dir;
  std::string out_dir;
  std::string resume_path;
  std::string objective;
  int width = 0;
  int steps = 0;
  int epochs = 0;
  uint64_t seed = 0;
  int batch_size = 0;
  double learning_rate = 0.0;
  CLI::Option* o_objective = nullptr;
  CLI::Option* o_width = nullptr;
  CLI::Option* o_steps = nullptr;
  CLI::Option* o_epochs = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_batch = nullptr;
  CLI::Option* o_lr = nullptr;
};

std::vector<EpochPoint> load_curve_prefix(const std::string& path,
                                          int before_epoch) {
  std::vector<EpochPoint> out;
  std::ifstream in(path);
  if (!in.good()) return out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    EpochPoint p;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf", &p.epoch, &p.train_loss,
                    &p.val_loss) == 3 &&
        p.epoch < before_epoch)
      out.push_back(p);
  }
  return out;
}

// Forwards to the trainer while rewriting the curve file and echoing one
// line per epoch, so an aborted run still leaves its trajectory on disk.
struct PersistingDriver : FitDriver {
  FitDriver* inner = nullptr;
  std::vector<EpochPoint> curve;
  std::string csv_path;

  double train_epoch(int epoch) override { return inner->train_epoch(epoch); }
  double validation_loss(int epoch) override {
    return inner->validation_loss(epoch);
  }
  void snapshot(int epoch, double train_loss, double val_loss,
                bool is_best) override {
    inner->snapshot(epoch, train_loss, val_loss, is_best);
    curve.push_back({epoch, train_loss, val_loss});
    std::ostringstream os;
    write_curve_csv(os, curve);
    write_text_file(csv_path, os.str());
    std::cout << "epoch " << std::setw(4) << epoch << "  train " << std::fixed
              << std::setprecision(6) << train_loss << "  val " << val_loss
              << (is_best ? "  *" : "") << "\n";
  }
};

int run_pretrain(const PretrainArgs& a) {
  Overrides sugar;
  if (a.o_objective->count())
    sugar.push_back({"model.objective", a.objective});
  if (a.o_width->count())
    sugar.push_back({"model.width", std::to_string(a.width)});
  if (a.o_steps->count())
    sugar.push_back({"model.steps", std::to_string(a.steps)});
  if (a.o_epochs->count())
    sugar.push_back({"train.epochs", std::to_string(a.epochs)});
  if (a.o_seed->count()) sugar.push_back({"train.seed", std::to_string(a.seed)});
  if (a.o_batch->count())
    sugar.push_back({"train.batch_size", std::to_string(a.batch_size)});
  if (a.o_lr->count())
    sugar.push_back({"train.learning_rate", num(a.learning_rate)});
  const RunConfig cfg = build_config(a.config, sugar);

  const Corpus corpus = load_corpus(a.corpus_dir);
  fs::create_directories(a.out_dir);
  echo_config(cfg, a.out_dir);

  std::optional<Trainer<float>> trainer;
  if (a.resume_path.empty()) {
    trainer.emplace(cfg, corpus);
  } else {
    const Checkpoint resume = load_checkpoint(a.resume_path);
    trainer.emplace(cfg, corpus, resume);
  }
  trainer->on_snapshot = [&](const Checkpoint& ckpt, bool is_best) {
    save_checkpoint(a.out_dir + "/last.ckpt", ckpt);
    if (is_best) save_checkpoint(a.out_dir + "/best.ckpt", ckpt);
  };

  PersistingDriver driver;
  driver.inner = &*trainer;
  driver.csv_path = a.out_dir + "/curves.csv";
  driver.curve = load_curve_prefix(driver.csv_path, trainer->first_epoch());
  if (driver.curve.empty() && !a.resume_path.empty()) {
    // Resuming into a fresh directory: carry the earlier trajectory over
    // from where the checkpoint lives.
    const std::string neighbor =
        (fs::path(a.resume_path).parent_path() / "curves.csv").string();
    driver.curve = load_curve_prefix(neighbor, trainer->first_epoch());
  }

  const FitResult result =
      fit_loop(driver, cfg.train.epochs, trainer->first_epoch());
  if (result.curve.empty()) {
    std::cout << "nothing to do: checkpoint already at epoch "
              << trainer->first_epoch() - 1 << "\n";
    return 0;
  }
  std::cout << "best epoch " << result.best_epoch << " (val "
            << std::setprecision(6) << result.best_val_loss << "), artifacts in "
            << a.out_dir << "\n";
  return 0;
}

// ---- extract -------------------------------------------------------------------

struct ExtractArgs {
  std::string checkpoint_path;
  std::string corpus_dir;
  std::string out_dir;
  int threads = 0;
};

int run_extract(const ExtractArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint_path);
  PretrainModel<float> model = model_from_checkpoint<float>(ckpt);
  model.set_trainable(false);  // forward passes record no graph: pure values
  const Corpus corpus = load_corpus(a.corpus_dir);
  fs::create_directories(a.out_dir);
  echo_config(ckpt.config, a.out_dir);

  const int workers = resolve_thread_count(a.threads);
  const int64_t n = static_cast<int64_t>(corpus.utterances.size());
  std::vector<Representation> reps(corpus.utterances.size());
  parallel_for(n, workers, [&](int64_t i) {
    reps[i] = extract_representation(model, corpus.utterances[i]);
  });
  for (size_t i = 0; i < corpus.utterances.size(); ++i)
    write_rep_file(a.out_dir + "/" + corpus.utterances[i].id + ".rep",
                   reps[i]);
  std::cout << "wrote " << corpus.utterances.size() << " representations (dim "
            << ckpt.config.model.representation_dim() << ") to " << a.out_dir
            << "\n";
  return 0;
}

// ---- abx -----------------------------------------------------------------------

struct AbxArgs {
  ConfigArgs config;
  std::vector<std::string> reps_dirs;
  std::string corpus_dir;
  std::string out_path;
  std::string conditions;
  bool weighted = false;
  bool triphone = false;
  CLI::Option* o_conditions = nullptr;
};

AbxReport score_rep_dir(const std::string& dir, const Corpus& corpus,
                        const AbxConfig& abx_cfg, double hop_s) {
  const ConditionFilter filter = parse_condition_filter(abx_cfg.conditions);
  std::map<std::string, std::pair<size_t, size_t>> spans;
  for (size_t i = 0; i < corpus.alignments.size();) {
    size_t j = i;
    while (j < corpus.alignments.size() &&
           corpus.alignments[j].utterance_id ==
               corpus.alignments[i].utterance_id)
      ++j;
    spans[corpus.alignments[i].utterance_id] = {i, j};
    i = j;
  }

  std::vector<SegmentRep> segments;
  std::vector<std::string> missing;
  for (const Utterance& u : corpus.utterances) {
    if (u.subset == "train") continue;  // conditions cover dev/test only
    if (!filter.subsets.empty() && !filter.subsets.count(u.subset)) continue;
    const auto it = spans.find(u.id);
    if (it == spans.end()) continue;
    const std::string path = dir + "/" + u.id + ".rep";
    if (!fs::exists(path)) {
      missing.push_back(u.id);
      continue;
    }
    const Representation rep = read_rep_file(path);
    const std::span<const AlignmentRecord> records(
        corpus.alignments.data() + it->second.first,
        it->second.second - it->second.first);
    std::vector<SegmentRep> cut =
        cut_segments(rep, records, u.subset, hop_s, abx_cfg.triphone_segments);
    for (SegmentRep& s : cut) segments.push_back(std::move(s));
  }
  if (!missing.empty()) {
    std::string joined;
    for (const std::string& id : missing)
      joined += (joined.empty() ? "" : ", ") + id;
    require_data(false, "missing representation files under ", dir, " for: ",
                 joined);
  }
  return evaluate_abx(segments, abx_cfg);
}

std::string comparison_table(const std::string& dir_a, const AbxReport& a,
                             const std::string& dir_b, const AbxReport& b) {
  std::ostringstream os;
  os << "comparison: A = " << dir_a << ", B = " << dir_b << "\n";
  os << std::left << std::setw(44) << "condition" << std::right
     << std::setw(10) << "A" << std::setw(10) << "B" << std::setw(10)
     << "A-B" << "\n";
  os << std::fixed << std::setprecision(4);
  for (size_t i = 0; i < a.conditions.size(); ++i) {
    const ConditionResult& ra = a.conditions[i];
    const ConditionResult& rb = b.conditions[i];
    os << std::left << std::setw(44) << ra.condition.name() << std::right;
    if (ra.triples > 0 && rb.triples > 0)
      os << std::setw(10) << ra.error << std::setw(10) << rb.error
         << std::setw(10) << ra.error - rb.error;
    else
      os << std::setw(10) << "-" << std::setw(10) << "-" << std::setw(10)
         << "-";
    os << "\n";
  }
  os << std::left << std::setw(44) << "mean" << std::right << std::setw(10)
     << a.mean << std::setw(10) << b.mean << std::setw(10) << a.mean - b.mean
     << "\n";
  return os.str();
}

int run_abx(const AbxArgs& a) {
  require(!a.reps_dirs.empty() && a.reps_dirs.size() <= 2,
          "expected one or two representation directories, got ",
          a.reps_dirs.size());
  Overrides sugar;
  if (a.o_conditions->count())
    sugar.push_back({"abx.conditions", a.conditions});
  if (a.weighted) sugar.push_back({"abx.weight_by_triples", "true"});
  if (a.triphone) sugar.push_back({"abx.triphone_segments", "true"});
  const RunConfig cfg = build_config(a.config, sugar);

  const Corpus corpus = load_corpus(a.corpus_dir);
  std::ostringstream text;
  std::vector<AbxReport> reports;
  for (const std::string& dir : a.reps_dirs) {
    reports.push_back(
        score_rep_dir(dir, corpus, cfg.abx, cfg.model.features.hop_s));
    text << "# " << dir << "\n" << reports.back().to_text() << "\n";
  }
  if (reports.size() == 2)
    text << comparison_table(a.reps_dirs[0], reports[0], a.reps_dirs[1],
                             reports[1]);

  std::cout << text.str();
  const std::string out_path =
      a.out_path.empty() ? a.reps_dirs[0] + "/abx_report.txt" : a.out_path;
  write_text_file(out_path, text.str());
  return 0;
}

// ---- verify --------------------------------------------------------------------

int run_verify(const std::string& suite) {
  std::vector<std::string> suites;
  if (suite == "all")
    suites = verify_suite_names();
  else
    suites.push_back(suite);
  bool ok = true;
  for (const std::string& name : suites) {
    const VerifyReport report = run_verify_suite(name);
    std::cout << report.to_text();
    ok = ok && report.all_passed();
  }
  return ok ? 0 : kExitNumeric;
}

// ---- info ----------------------------------------------------------------------

void info_corpus(const std::string& dir) {
  const Corpus corpus = load_corpus(dir);
  std::map<std::string, int> per_subset;
  std::map<std::string, int> per_speaker;
  double seconds = 0.0;
  for (const Utterance& u : corpus.utterances) {
    ++per_subset[u.subset];
    ++per_speaker[u.speaker];
    seconds += u.duration_s();
  }
  std::map<std::string, int> per_phone;
  for (const AlignmentRecord& r : corpus.alignments) ++per_phone[r.phone];
  std::cout << "corpus " << dir << "\n"
            << "utterances = " << corpus.utterances.size() << "\n"
            << "speakers = " << per_speaker.size() << "\n"
            << "phones = " << per_phone.size() << "\n"
            << "aligned segments = " << corpus.alignments.size() << "\n"
            << "audio minutes = " << std::fixed << std::setprecision(2)
            << seconds / 60.0 << "\n";
  for (const auto& [subset, count] : per_subset)
    std::cout << "subset " << subset << " = " << count << "\n";
}

void info_checkpoint(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  int64_t params = 0;
  for (const Checkpoint::Blob& blob : ckpt.weights)
    params += static_cast<int64_t>(blob.values.size());
  std::cout << "checkpoint " << path << "\n"
            << "objective = " << objective_name(ckpt.config.model.objective)
            << "\n"
            << "width = " << ckpt.config.model.context_width() << "\n"
            << "steps = " << ckpt.config.model.predictor.steps << "\n"
            << "epoch = " << ckpt.epoch << "\n"
            << "val_loss = " << ckpt.val_loss << "\n"
            << "optimizer_steps = " << ckpt.opt_steps << "\n"
            << "weight_tensors = " << ckpt.weights.size() << "\n"
            << "parameters = " << params << "\n"
            << "codebook_values = " << ckpt.codebook.size() << "\n";
}

void info_rep(const std::string& path) {
  const Representation rep = read_rep_file(path);
  std::cout << "representation " << path << "\n"
            << "frames = " << rep.frames << "\n"
            << "dim = " << rep.dim << "\n";
}

int run_info(const std::string& path) {
  if (fs::is_directory(path)) {
    info_corpus(path);
    return 0;
  }
  std::ifstream in(path, std::ios::binary);
  require_data(in.good(), "cannot open ", path);
  char magic[11] = {};
  in.read(magic, sizeof(magic));
  const std::string head(magic, static_cast<size_t>(in.gcount()));
  in.close();
  if (head.rfind("ctxpre-ckpt", 0) == 0) {
    info_checkpoint(path);
  } else if (head.rfind("ctxpre-rep", 0) == 0) {
    info_rep(path);
  } else {
    // Anything else must be a config file; echo its canonical form.
    const RunConfig cfg = load_run_config(path);
    std::cout << serialize_run_config(cfg);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Desk-scale laboratory for context-width-controlled self-supervised "
      "speech pre-training"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "synthesize a labeled phone corpus");
  add_config_options(synth, synth_args.config);
  synth->add_option("--out", synth_args.out_dir, "corpus output directory")
      ->required();
  synth_args.o_seed =
      synth->add_option("--seed", synth_args.seed, "synthesis seed");
  synth_args.o_phones =
      synth->add_option("--phones", synth_args.phones, "phone inventory size");
  synth_args.o_speakers =
      synth->add_option("--speakers", synth_args.speakers, "speaker count");
  synth_args.o_minutes = synth->add_option("--minutes", synth_args.minutes,
                                           "total audio minutes");

  PretrainArgs pre_args;
  CLI::App* pretrain =
      app.add_subcommand("pretrain", "pre-train a model on a corpus");
  add_config_options(pretrain, pre_args.config);
  pretrain->add_option("--corpus", pre_args.corpus_dir, "corpus directory")
      ->required();
  pretrain->add_option("--out", pre_args.out_dir, "output directory")
      ->required();
  pretrain->add_option("--resume", pre_args.resume_path,
                       "checkpoint to continue from");
  pre_args.o_objective = pretrain->add_option(
      "--objective", pre_args.objective, "cpc, cpc-last, or bestrq");
  pre_args.o_width = pretrain->add_option("--width", pre_args.width,
                                          "attention window, 0 = unbounded");
  pre_args.o_steps =
      pretrain->add_option("--steps", pre_args.steps, "prediction steps");
  pre_args.o_epochs =
      pretrain->add_option("--epochs", pre_args.epochs, "training epochs");
  pre_args.o_seed =
      pretrain->add_option("--seed", pre_args.seed, "training seed");
  pre_args.o_batch = pretrain->add_option("--batch-size", pre_args.batch_size,
                                          "utterances per batch");
  pre_args.o_lr = pretrain->add_option("--learning-rate",
                                       pre_args.learning_rate, "step size");

  ExtractArgs ext_args;
  CLI::App* extract = app.add_subcommand(
      "extract", "write one representation file per utterance");
  extract->add_option("--checkpoint", ext_args.checkpoint_path,
                      "trained checkpoint")
      ->required();
  extract->add_option("--corpus", ext_args.corpus_dir, "corpus directory")
      ->required();
  extract->add_option("--out", ext_args.out_dir, "output directory")
      ->required();
  extract->add_option(
      "--threads", ext_args.threads,
      "worker threads (default: CTXPRE_THREADS or 1); output is identical "
      "for any count");

  AbxArgs abx_args;
  CLI::App* abx = app.add_subcommand(
      "abx", "phone discriminability of extracted representations");
  add_config_options(abx, abx_args.config);
  abx->add_option("--reps", abx_args.reps_dirs,
                  "representation directory (give twice to compare)")
      ->required()
      ->type_size(1);
  abx->add_option("--corpus", abx_args.corpus_dir,
                  "corpus directory with alignments")
      ->required();
  abx->add_option("--out", abx_args.out_path,
                  "report file (default: <reps>/abx_report.txt)");
  abx_args.o_conditions = abx->add_option(
      "--conditions", abx_args.conditions,
      "comma-separated filter, e.g. dev-clean,within-speaker");
  abx->add_flag("--weighted", abx_args.weighted,
                "weight phone-pair cells by triple count");
  abx->add_flag("--triphone", abx_args.triphone,
                "widen segments with one neighbor phone per side");

  std::string verify_suite = "all";
  CLI::App* verify =
      app.add_subcommand("verify", "run built-in self-check suites");
  verify->add_option("suite", verify_suite,
                     "gradients, causality, oracles, losses, or all");

  std::string info_path;
  CLI::App* info = app.add_subcommand(
      "info", "describe a corpus directory, checkpoint, representation, or "
              "config file");
  info->add_option("path", info_path, "artifact path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (pretrain->parsed()) return run_pretrain(pre_args);
    if (extract->parsed()) return run_extract(ext_args);
    if (abx->parsed()) return run_abx(abx_args);
    if (verify->parsed()) return run_verify(verify_suite);
    if (info->parsed()) return run_info(info_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
