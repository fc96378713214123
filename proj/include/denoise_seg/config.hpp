// Copyright (c) 2026, The denoise-seg Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Training configuration and its flat key-value text form:
//
//   # comment
//   epochs = 50
//   cld.gamma = 0.9
//
// Unknown keys are rejected so typos fail before any training starts.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "denoise_seg/balanced_sampler.hpp"
#include "denoise_seg/dual_stream_model.hpp"
#include "denoise_seg/error.hpp"
#include "denoise_seg/losses_metrics.hpp"
#include "denoise_seg/mask_sampler.hpp"

namespace denoise_seg {

enum class Ablation {
  kBaseline,  // single clean stream, plain CE on the given labels
  kCldOnly,   // clean-label disentangling, no balancing, no noisy features
  kCbsOnly,   // class-balanced sampling only
  kCldCbs,    // disentangling + balancing, single stream
  kNaCld,     // full dual-stream system
};

inline std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kBaseline: return "BASELINE";
    case Ablation::kCldOnly: return "CLD_ONLY";
    case Ablation::kCbsOnly: return "CBS_ONLY";
    case Ablation::kCldCbs: return "CLD_CBS";
    case Ablation::kNaCld: return "NA_CLD";
  }
  return "?";
}

inline Ablation parse_ablation(const std::string& s) {
  for (auto a : {Ablation::kBaseline, Ablation::kCldOnly, Ablation::kCbsOnly, Ablation::kCldCbs, Ablation::kNaCld}) {
    if (s == to_string(a)) return a;
  }
  throw Error("invalid_config", "unknown ablation '" + s + "'");
}

inline bool uses_cld(Ablation a) { return a == Ablation::kCldOnly || a == Ablation::kCldCbs || a == Ablation::kNaCld; }
inline bool uses_cbs(Ablation a) { return a == Ablation::kCbsOnly || a == Ablation::kCldCbs || a == Ablation::kNaCld; }
inline bool uses_noisy_features(Ablation a) { return a == Ablation::kNaCld; }

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in, const std::string& origin = "config") {
  KeyValues out;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "invalid_config",
            origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

inline KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "io_error", "cannot open config file " + path);
  return parse_key_values(in, path);
}

struct TrainConfig {
  int epochs = 50;
  int batch_size = 6;
  double lr0 = 0.001;
  double poly_power = 0.9;
  double momentum = 0.9;
  double weight_decay = 0.0;
  CldConfig cld;
  CbsConfig cbs;
  LossWeights weights;
  Ablation ablation = Ablation::kNaCld;
  std::uint64_t seed = 0;
  std::string data_dir;
  std::string out_dir;
  double val_fraction = 0.2;  // trailing share of the dataset held out for evaluation
  int eval_every = 1;
  std::array<int, 4> widths{8, 16, 32, 64};
  std::array<int, 4> strides{2, 2, 2, 1};
  int fuse_hidden = 256;

  void validate() const {
    require(epochs >= 1, "invalid_config", "epochs must be >= 1");
    require(batch_size >= 1, "invalid_config", "batch_size must be >= 1");
    require(lr0 > 0.0, "invalid_config", "lr0 must be > 0");
    require(poly_power >= 0.0, "invalid_config", "poly_power must be >= 0");
    require(momentum >= 0.0 && momentum < 1.0, "invalid_config", "momentum must be in [0,1)");
    require(weight_decay >= 0.0, "invalid_config", "weight_decay must be >= 0");
    require(val_fraction >= 0.0 && val_fraction < 1.0, "invalid_config", "data.val_fraction must be in [0,1)");
    require(eval_every >= 1, "invalid_config", "eval_every must be >= 1");
    require(fuse_hidden >= 1, "invalid_config", "model.fuse_hidden must be >= 1");
    cld.validate();
    cbs.validate();
    weights.validate();
  }

  ModelConfig model_config(int in_channels, int num_categories) const {
    ModelConfig m;
    m.in_channels = in_channels;
    m.num_categories = num_categories;
    m.widths = widths;
    m.strides = strides;
    m.fuse_hidden = fuse_hidden;
    m.noisy_stream = uses_noisy_features(ablation);
    m.fusion = uses_noisy_features(ablation);
    return m;
  }

  KeyValues to_key_values() const {
    auto num = [](double v) {
      std::ostringstream os;
      os.precision(17);
      os << v;
      return os.str();
    };
    auto list = [](const std::array<int, 4>& a) {
      std::string s;
      for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + std::to_string(a[i]);
      return s;
    };
    return {
        {"epochs", std::to_string(epochs)},
        {"batch_size", std::to_string(batch_size)},
        {"lr0", num(lr0)},
        {"poly_power", num(poly_power)},
        {"momentum", num(momentum)},
        {"weight_decay", num(weight_decay)},
        {"cld.strategy", to_string(cld.strategy)},
        {"cld.gamma", num(cld.gamma)},
        {"cld.warmup_epochs", std::to_string(cld.warmup_epochs)},
        {"cld.target_source", to_string(cld.target_source)},
        {"cbs.rho", num(cbs.rho)},
        {"cbs.resample_each_batch", cbs.resample_each_batch ? "true" : "false"},
        {"loss.lambda1", num(weights.lambda1)},
        {"loss.lambda2", num(weights.lambda2)},
        {"ablation", to_string(ablation)},
        {"seed", std::to_string(seed)},
        {"data_dir", data_dir},
        {"out_dir", out_dir},
        {"data.val_fraction", num(val_fraction)},
        {"eval_every", std::to_string(eval_every)},
        {"model.widths", list(widths)},
        {"model.strides", list(strides)},
        {"model.fuse_hidden", std::to_string(fuse_hidden)},
    };
  }

  /// Overrides fields from `kv`; unspecified keys keep their defaults.
  void apply(const KeyValues& kv) {
    for (const auto& [key, value] : kv) {
      try {
        set(key, value);
      } catch (const std::logic_error&) {
        throw Error("invalid_config", "bad value '" + value + "' for key " + key);
      }
    }
  }

  static TrainConfig from_key_values(const KeyValues& kv) {
    TrainConfig cfg;
    cfg.apply(kv);
    return cfg;
  }

  static TrainConfig from_file(const std::string& path) { return from_key_values(read_key_values(path)); }

 private:
  static bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument(v);
  }

  static std::array<int, 4> parse_four(const std::string& key, const std::string& v) {
    std::array<int, 4> out{};
    std::istringstream in(v);
    std::string item;
    std::size_t i = 0;
    while (std::getline(in, item, ',')) {
      require(i < out.size(), "invalid_config", key + " takes exactly 4 values");
      out[i++] = std::stoi(item);
    }
    require(i == out.size(), "invalid_config", key + " takes exactly 4 values");
    return out;
  }

  void set(const std::string& key, const std::string& v) {
    if (key == "epochs") epochs = std::stoi(v);
    else if (key == "batch_size") batch_size = std::stoi(v);
    else if (key == "lr0") lr0 = std::stod(v);
    else if (key == "poly_power") poly_power = std::stod(v);
    else if (key == "momentum") momentum = std::stod(v);
    else if (key == "weight_decay") weight_decay = std::stod(v);
    else if (key == "cld.strategy") cld.strategy = parse_cld_strategy(v);
    else if (key == "cld.gamma") cld.gamma = std::stod(v);
    else if (key == "cld.warmup_epochs") cld.warmup_epochs = std::stoi(v);
    else if (key == "cld.target_source") cld.target_source = parse_target_source(v);
    else if (key == "cbs.rho") cbs.rho = std::stod(v);
    else if (key == "cbs.resample_each_batch") cbs.resample_each_batch = parse_bool(v);
    else if (key == "loss.lambda1") weights.lambda1 = std::stod(v);
    else if (key == "loss.lambda2") weights.lambda2 = std::stod(v);
    else if (key == "ablation") ablation = parse_ablation(v);
    else if (key == "seed") seed = std::stoull(v);
    else if (key == "data_dir") data_dir = v;
    else if (key == "out_dir") out_dir = v;
    else if (key == "data.val_fraction") val_fraction = std::stod(v);
    else if (key == "eval_every") eval_every = std::stoi(v);
    else if (key == "model.fuse_hidden") fuse_hidden = std::stoi(v);
    else if (key == "model.widths") widths = parse_four(key, v);
    else if (key == "model.strides") strides = parse_four(key, v);
    else {
      throw Error("invalid_config", "unknown config key '" + key + "'");
    }
  }
};

}  // namespace denoise_seg
