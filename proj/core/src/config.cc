// core/src/config.cc

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

#include "ctxpre/config.h"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "ctxpre/common.h"

namespace ctxpre {

void TrainConfig::validate() const {
  require(epochs >= 1, "train: epochs must be >= 1, got ", epochs);
  require(batch_size >= 1, "train: batch_size must be >= 1, got ", batch_size);
  require(learning_rate >= 0.0, "train: learning_rate must be >= 0, got ",
          learning_rate);
  require(beta1 >= 0.0 && beta1 < 1.0, "train: beta1 must be in [0,1), got ",
          beta1);
  require(beta2 >= 0.0 && beta2 < 1.0, "train: beta2 must be in [0,1), got ",
          beta2);
  require(epsilon > 0.0, "train: epsilon must be > 0, got ", epsilon);
  require(clip_norm >= 0.0, "train: clip_norm must be >= 0, got ", clip_norm);
  require(val_fraction > 0.0 && val_fraction < 1.0,
          "train: val_fraction must be in (0,1), got ", val_fraction);
}

// ---- Value codecs ------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest decimal text that parses back to the same double.
std::string format_double(double v) {
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return "0";
}

int64_t parse_int(const std::string& text) {
  const std::string t = trim(text);
  int64_t out = 0;
  const auto [ptr, ec] =
      std::from_chars(t.data(), t.data() + t.size(), out);
  require_data(ec == std::errc() && ptr == t.data() + t.size(),
               "expected an integer, got '", text, "'");
  return out;
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  require_data(!t.empty(), "expected a number, got an empty value");
  char* end = nullptr;
  const double out = std::strtod(t.c_str(), &end);
  require_data(end == t.c_str() + t.size(), "expected a number, got '", text,
               "'");
  return out;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  throw DataError("expected true or false, got '" + text + "'");
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string t = trim(text);
  require_data(!t.empty(), "expected a comma-separated integer list");
  std::istringstream in(t);
  std::string field;
  while (std::getline(in, field, ','))
    out.push_back(static_cast<int>(parse_int(field)));
  return out;
}

std::string format_int_list(const std::vector<int>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

// One dialect key: how to print it and how to absorb a new value.
struct Binding {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::vector<Binding> make_bindings() {
  std::vector<Binding> b;
  auto add = [&](std::string section, std::string key,
                 std::function<std::string(const RunConfig&)> get,
                 std::function<void(RunConfig&, const std::string&)> set) {
    b.push_back({std::move(section), std::move(key), std::move(get),
                 std::move(set)});
  };
  // [model]
  add("model", "objective",
      [](const RunConfig& c) { return objective_name(c.model.objective); },
      [](RunConfig& c, const std::string& v) {
        try {
          c.model.objective = parse_objective(trim(v));
        } catch (const std::invalid_argument& e) {
          throw DataError(e.what());
        }
      });
  add("model", "width",
      [](const RunConfig& c) {
        return std::to_string(c.model.ar.layer.attention.width);
      },
      [](RunConfig& c, const std::string& v) {
        c.model.ar.layer.attention.width = static_cast<int>(parse_int(v));
      });
  add("model", "layers",
      [](const RunConfig& c) { return std::to_string(c.model.ar.layers); },
      [](RunConfig& c, const std::string& v) {
        c.model.ar.layers = static_cast<int>(parse_int(v));
      });
  add("model", "heads",
      [](const RunConfig& c) {
        return std::to_string(c.model.ar.layer.attention.heads);
      },
      [](RunConfig& c, const std::string& v) {
        c.model.ar.layer.attention.heads = static_cast<int>(parse_int(v));
      });
  add("model", "ff_hidden",
      [](const RunConfig& c) {
        return std::to_string(c.model.ar.layer.ff_hidden);
      },
      [](RunConfig& c, const std::string& v) {
        c.model.ar.layer.ff_hidden = static_cast<int>(parse_int(v));
      });
  add("model", "context_dim",
      [](const RunConfig& c) { return std::to_string(c.model.ar.final_dim); },
      [](RunConfig& c, const std::string& v) {
        c.model.ar.final_dim = static_cast<int>(parse_int(v));
      });
  add("model", "positional_encoding",
      [](const RunConfig& c) {
        return c.model.ar.positional_encoding ? "true" : "false";
      },
      [](RunConfig& c, const std::string& v) {
        c.model.ar.positional_encoding = parse_bool(v);
      });
  add("model", "encoder_channels",
      [](const RunConfig& c) {
        return std::to_string(c.model.encoder.channels);
      },
      [](RunConfig& c, const std::string& v) {
        c.model.encoder.channels = static_cast<int>(parse_int(v));
      });
  add("model", "encoder_kernels",
      [](const RunConfig& c) { return format_int_list(c.model.encoder.kernels); },
      [](RunConfig& c, const std::string& v) {
        c.model.encoder.kernels = parse_int_list(v);
      });
  add("model", "encoder_strides",
      [](const RunConfig& c) { return format_int_list(c.model.encoder.strides); },
      [](RunConfig& c, const std::string& v) {
        c.model.encoder.strides = parse_int_list(v);
      });
  add("model", "encoder_layer_norm",
      [](const RunConfig& c) {
        return c.model.encoder.layer_norm_between ? "true" : "false";
      },
      [](RunConfig& c, const std::string& v) {
        c.model.encoder.layer_norm_between = parse_bool(v);
      });
  add("model", "steps",
      [](const RunConfig& c) { return std::to_string(c.model.predictor.steps); },
      [](RunConfig& c, const std::string& v) {
        c.model.predictor.steps = static_cast<int>(parse_int(v));
      });
  add("model", "negatives",
      [](const RunConfig& c) { return std::to_string(c.model.negatives); },
      [](RunConfig& c, const std::string& v) {
        c.model.negatives = static_cast<int>(parse_int(v));
      });
  add("model", "codebook_size",
      [](const RunConfig& c) {
        return std::to_string(c.model.bestrq.codebook_size);
      },
      [](RunConfig& c, const std::string& v) {
        c.model.bestrq.codebook_size = static_cast<int>(parse_int(v));
      });
  add("model", "codebook_seed",
      [](const RunConfig& c) {
        return std::to_string(c.model.bestrq.codebook_seed);
      },
      [](RunConfig& c, const std::string& v) {
        c.model.bestrq.codebook_seed = static_cast<uint64_t>(parse_int(v));
      });
  add("model", "mask_prob",
      [](const RunConfig& c) { return format_double(c.model.bestrq.mask_prob); },
      [](RunConfig& c, const std::string& v) {
        c.model.bestrq.mask_prob = parse_double(v);
      });
  add("model", "mask_span",
      [](const RunConfig& c) {
        return std::to_string(c.model.bestrq.mask_span);
      },
      [](RunConfig& c, const std::string& v) {
        c.model.bestrq.mask_span = static_cast<int>(parse_int(v));
      });
  add("model", "masked_only",
      [](const RunConfig& c) {
        return c.model.bestrq.masked_only ? "true" : "false";
      },
      [](RunConfig& c, const std::string& v) {
        c.model.bestrq.masked_only = parse_bool(v);
      });
  add("model", "gaussian_fill",
      [](const RunConfig& c) {
        return c.model.bestrq.gaussian_fill ? "true" : "false";
      },
      [](RunConfig& c, const std::string& v) {
        c.model.bestrq.gaussian_fill = parse_bool(v);
      });

  // [features]
  add("features", "n_mels",
      [](const RunConfig& c) { return std::to_string(c.model.features.n_mels); },
      [](RunConfig& c, const std::string& v) {
        c.model.features.n_mels = static_cast<int>(parse_int(v));
      });
  add("features", "window_s",
      [](const RunConfig& c) { return format_double(c.model.features.window_s); },
      [](RunConfig& c, const std::string& v) {
        c.model.features.window_s = parse_double(v);
      });
  add("features", "hop_s",
      [](const RunConfig& c) { return format_double(c.model.features.hop_s); },
      [](RunConfig& c, const std::string& v) {
        c.model.features.hop_s = parse_double(v);
      });
  add("features", "fmin_hz",
      [](const RunConfig& c) { return format_double(c.model.features.fmin_hz); },
      [](RunConfig& c, const std::string& v) {
        c.model.features.fmin_hz = parse_double(v);
      });
  add("features", "fmax_hz",
      [](const RunConfig& c) { return format_double(c.model.features.fmax_hz); },
      [](RunConfig& c, const std::string& v) {
        c.model.features.fmax_hz = parse_double(v);
      });
  add("features", "sample_rate",
      [](const RunConfig& c) {
        return std::to_string(c.model.features.sample_rate);
      },
      [](RunConfig& c, const std::string& v) {
        c.model.features.sample_rate = static_cast<int>(parse_int(v));
      });

  // [train]
  add("train", "epochs",
      [](const RunConfig& c) { return std::to_string(c.train.epochs); },
      [](RunConfig& c, const std::string& v) {
        c.train.epochs = static_cast<int>(parse_int(v));
      });
  add("train", "batch_size",
      [](const RunConfig& c) { return std::to_string(c.train.batch_size); },
      [](RunConfig& c, const std::string& v) {
        c.train.batch_size = static_cast<int>(parse_int(v));
      });
  add("train", "learning_rate",
      [](const RunConfig& c) { return format_double(c.train.learning_rate); },
      [](RunConfig& c, const std::string& v) {
        c.train.learning_rate = parse_double(v);
      });
  add("train", "beta1",
      [](const RunConfig& c) { return format_double(c.train.beta1); },
      [](RunConfig& c, const std::string& v) {
        c.train.beta1 = parse_double(v);
      });
  add("train", "beta2",
      [](const RunConfig& c) { return format_double(c.train.beta2); },
      [](RunConfig& c, const std::string& v) {
        c.train.beta2 = parse_double(v);
      });
  add("train", "epsilon",
      [](const RunConfig& c) { return format_double(c.train.epsilon); },
      [](RunConfig& c, const std::string& v) {
        c.train.epsilon = parse_double(v);
      });
  add("train", "clip_norm",
      [](const RunConfig& c) { return format_double(c.train.clip_norm); },
      [](RunConfig& c, const std::string& v) {
        c.train.clip_norm = parse_double(v);
      });
  add("train", "seed",
      [](const RunConfig& c) { return std::to_string(c.train.seed); },
      [](RunConfig& c, const std::string& v) {
        c.train.seed = static_cast<uint64_t>(parse_int(v));
      });
  add("train", "val_fraction",
      [](const RunConfig& c) { return format_double(c.train.val_fraction); },
      [](RunConfig& c, const std::string& v) {
        c.train.val_fraction = parse_double(v);
      });

  // [synth]
  add("synth", "seed",
      [](const RunConfig& c) { return std::to_string(c.synth.seed); },
      [](RunConfig& c, const std::string& v) {
        c.synth.seed = static_cast<uint64_t>(parse_int(v));
      });
  add("synth", "phones",
      [](const RunConfig& c) { return std::to_string(c.synth.n_phones); },
      [](RunConfig& c, const std::string& v) {
        c.synth.n_phones = static_cast<int>(parse_int(v));
      });
  add("synth", "speakers",
      [](const RunConfig& c) { return std::to_string(c.synth.n_speakers); },
      [](RunConfig& c, const std::string& v) {
        c.synth.n_speakers = static_cast<int>(parse_int(v));
      });
  add("synth", "minutes",
      [](const RunConfig& c) { return format_double(c.synth.total_minutes); },
      [](RunConfig& c, const std::string& v) {
        c.synth.total_minutes = parse_double(v);
      });
  add("synth", "words_per_utterance",
      [](const RunConfig& c) {
        return std::to_string(c.synth.words_per_utterance);
      },
      [](RunConfig& c, const std::string& v) {
        c.synth.words_per_utterance = static_cast<int>(parse_int(v));
      });
  add("synth", "duration_mean_s",
      [](const RunConfig& c) { return format_double(c.synth.duration_mean_s); },
      [](RunConfig& c, const std::string& v) {
        c.synth.duration_mean_s = parse_double(v);
      });
  add("synth", "duration_std_s",
      [](const RunConfig& c) { return format_double(c.synth.duration_std_s); },
      [](RunConfig& c, const std::string& v) {
        c.synth.duration_std_s = parse_double(v);
      });
  add("synth", "amplitude",
      [](const RunConfig& c) { return format_double(c.synth.amplitude); },
      [](RunConfig& c, const std::string& v) {
        c.synth.amplitude = parse_double(v);
      });
  add("synth", "noise_level",
      [](const RunConfig& c) { return format_double(c.synth.noise_level); },
      [](RunConfig& c, const std::string& v) {
        c.synth.noise_level = parse_double(v);
      });
  add("synth", "other_noise_factor",
      [](const RunConfig& c) {
        return format_double(c.synth.other_noise_factor);
      },
      [](RunConfig& c, const std::string& v) {
        c.synth.other_noise_factor = parse_double(v);
      });
  add("synth", "speaker_spread",
      [](const RunConfig& c) { return format_double(c.synth.speaker_spread); },
      [](RunConfig& c, const std::string& v) {
        c.synth.speaker_spread = parse_double(v);
      });
  add("synth", "base_fmin_hz",
      [](const RunConfig& c) { return format_double(c.synth.base_fmin_hz); },
      [](RunConfig& c, const std::string& v) {
        c.synth.base_fmin_hz = parse_double(v);
      });
  add("synth", "base_fmax_hz",
      [](const RunConfig& c) { return format_double(c.synth.base_fmax_hz); },
      [](RunConfig& c, const std::string& v) {
        c.synth.base_fmax_hz = parse_double(v);
      });

  // [abx]
  add("abx", "weight_by_triples",
      [](const RunConfig& c) { return c.abx.weight_by_triples ? "true" : "false"; },
      [](RunConfig& c, const std::string& v) {
        c.abx.weight_by_triples = parse_bool(v);
      });
  add("abx", "conditions",
      [](const RunConfig& c) { return c.abx.conditions; },
      [](RunConfig& c, const std::string& v) { c.abx.conditions = trim(v); });
  add("abx", "triphone_segments",
      [](const RunConfig& c) {
        return c.abx.triphone_segments ? "true" : "false";
      },
      [](RunConfig& c, const std::string& v) {
        c.abx.triphone_segments = parse_bool(v);
      });

  return b;
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = make_bindings();
  return table;
}

const Binding* find_binding(const std::string& section,
                            const std::string& key) {
  for (const auto& b : bindings())
    if (b.section == section && b.key == key) return &b;
  return nullptr;
}

}  // namespace

// ---- Wiring and defaults -----------------------------------------------------

void finalize_run_config(RunConfig& cfg) {
  ModelConfig& m = cfg.model;
  // The dialect only exposes the free knobs; dependent widths follow.
  m.predictor.layer.attention.model_dim = m.ar.final_dim;
  m.predictor.layer.attention.heads = m.ar.layer.attention.heads;
  m.predictor.layer.ff_hidden = m.ar.layer.ff_hidden;
  m.predictor.layer.attention.width = kUnboundedWidth;
  if (m.is_contrastive()) {
    m.ar.layer.attention.model_dim = m.encoder.channels;
    m.predictor.step_dim = m.encoder.channels;
  } else {
    m.ar.layer.attention.model_dim = m.features.n_mels;
    m.bestrq.latent_dim = m.features.n_mels;
    m.predictor.steps = 1;
    m.predictor.step_dim = m.bestrq.codebook_size;
  }
  m.validate();
  cfg.train.validate();
  cfg.synth.validate();
  cfg.abx.validate();
}

RunConfig default_run_config(Objective objective) {
  RunConfig cfg;
  cfg.model.objective = objective;
  finalize_run_config(cfg);
  return cfg;
}

// ---- Parse / serialize -------------------------------------------------------

RunConfig parse_run_config(std::istream& in, const std::string& origin) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      require_data(t.back() == ']', origin, ":", line_no,
                   ": unterminated section header '", t, "'");
      section = trim(t.substr(1, t.size() - 2));
      bool known = false;
      for (const auto& b : bindings()) known = known || b.section == section;
      require_data(known, origin, ":", line_no, ": unknown section [",
                   section, "]");
      continue;
    }
    const auto eq = t.find('=');
    require_data(eq != std::string::npos, origin, ":", line_no,
                 ": expected key = value, got '", t, "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    require_data(!section.empty(), origin, ":", line_no,
                 ": key '", key, "' appears before any [section]");
    const Binding* b = find_binding(section, key);
    require_data(b != nullptr, origin, ":", line_no, ": unknown key '", key,
                 "' in section [", section, "]");
    const std::string dotted = section + "." + key;
    require_data(seen.insert(dotted).second, origin, ":", line_no,
                 ": duplicate key '", dotted, "'");
    try {
      b->set(cfg, value);
    } catch (const DataError& e) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": key '" +
                      dotted + "': " + e.what());
    }
  }
  try {
    finalize_run_config(cfg);
  } catch (const std::invalid_argument& e) {
    throw DataError(origin + ": invalid configuration: " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  require_data(in.good(), "config: cannot open '", path, "'");
  return parse_run_config(in, path);
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& b : bindings()) {
    if (b.section != section) {
      if (!out.empty()) out += "\n";
      out += "[" + b.section + "]\n";
      section = b.section;
    }
    out += b.key + " = " + b.get(cfg) + "\n";
  }
  return out;
}

void apply_config_override(RunConfig& cfg, const std::string& dotted_key,
                           const std::string& value) {
  const auto dot = dotted_key.find('.');
  require(dot != std::string::npos && dot > 0 && dot + 1 < dotted_key.size(),
          "config: override key must look like section.key, got '",
          dotted_key, "'");
  const std::string section = dotted_key.substr(0, dot);
  const std::string key = dotted_key.substr(dot + 1);
  const Binding* b = find_binding(section, key);
  require(b != nullptr, "config: unknown key '", dotted_key, "'");
  try {
    b->set(cfg, value);
  } catch (const DataError& e) {
    throw DataError("config: key '" + dotted_key + "': " + e.what());
  }
}

}  // namespace ctxpre
