// core/include/ctxpre/config.h

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

#ifndef CTXPRE_CONFIG_H_
#define CTXPRE_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ctxpre/abx.h"
#include "ctxpre/corpus.h"
#include "ctxpre/model.h"

namespace ctxpre {

// Optimization loop settings; the architecture lives in ModelConfig.
struct TrainConfig {
  int epochs = 200;
  int batch_size = 12;        // utterances per batch
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;     // global gradient norm cap; 0 disables
  uint64_t seed = 1;
  double val_fraction = 0.05; // tail fraction of the corpus held out

  void validate() const;
};

// Everything a run needs, bound to the sectioned key = value dialect.
// AbxConfig lives with the evaluator in abx.h.
struct RunConfig {
  ModelConfig model;   // includes the featurizer settings
  TrainConfig train;
  SynthSpec synth;
  AbxConfig abx;
};

// Baseline run for one objective, already finalized.
RunConfig default_run_config(Objective objective);

// Wires the dependent widths that the dialect leaves implicit (attention
// dims, prediction-head width, codebook dim) and validates everything.
void finalize_run_config(RunConfig& cfg);

// Parses the dialect: [section] headers, key = value lines, full-line #
// comments.  Rejects unknown sections or keys, duplicate keys, and
// malformed values, citing `origin` and the line number.  The result is
// finalized.  load_run_config reads the named file.
RunConfig parse_run_config(std::istream& in, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Canonical text: fixed section and key order, one `key = value` per line.
// Parsing the output reproduces the config; serializing again reproduces
// the text byte for byte.
std::string serialize_run_config(const RunConfig& cfg);

// Sets one key given as "section.key" (the same names the file uses);
// used by command-line overrides.  Throws std::invalid_argument for
// unknown keys and DataError for unparsable values.  Callers re-finalize
// after the last override.
void apply_config_override(RunConfig& cfg, const std::string& dotted_key,
                           const std::string& value);

}  // namespace ctxpre

#endif  // CTXPRE_CONFIG_H_
