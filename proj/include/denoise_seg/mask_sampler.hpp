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

// Clean-label disentangling (CLD): per-pixel vote between the model's
// prediction and the given annotation, yielding the clean-selection mask and
// the supervision target for every selected pixel.

#include <string>

#include "denoise_seg/error.hpp"
#include "denoise_seg/raster.hpp"

namespace denoise_seg {

enum class CldStrategy {
  kStrategy1,  // confident prediction only (pseudo-label self-training)
  kStrategy2,  // confident prediction, or prediction agrees with annotation
};

enum class TargetSource {
  kVote,   // confident pixels are supervised with the prediction
  kGiven,  // selected pixels are always supervised with the annotation
};

struct CldConfig {
  CldStrategy strategy = CldStrategy::kStrategy2;
  double gamma = 0.9;
  int warmup_epochs = 10;
  TargetSource target_source = TargetSource::kVote;

  void validate() const {
    require(gamma > 0.0 && gamma < 1.0, "invalid_config", "cld.gamma must lie in (0,1)");
    require(warmup_epochs >= 0, "invalid_config", "cld.warmup_epochs must be >= 0");
  }
};

struct CleanSelection {
  SelectionMask mask;
  // Supervision target per pixel. Unselected pixels carry the given label as
  // a placeholder; every loss ignores them.
  LabelMap targets;
};

/// Pixel is confident iff its max probability >= gamma.
template <typename T>
CleanSelection sample_clean_mask(const BasicProbMap<T>& probs, const LabelMap& given, const CldConfig& cfg) {
  require_same_extent(probs, given, "sample_clean_mask");
  require(probs.num_categories == given.num_categories, "shape_mismatch",
          "sample_clean_mask: category count mismatch");
  CleanSelection out{SelectionMask(given.height, given.width), given};
  const auto vote = argmax_confidence(probs);
  for (std::size_t p = 0; p < given.pixel_count(); ++p) {
    const bool confident = static_cast<double>(vote.confidence[p]) >= cfg.gamma;
    const Category predicted = vote.predicted.entries[p];
    const Category label = given.entries[p];
    bool selected = confident;
    if (cfg.strategy == CldStrategy::kStrategy2) selected = confident || predicted == label;
    out.mask.entries[p] = selected ? 1 : 0;
    if (selected && confident && cfg.target_source == TargetSource::kVote) out.targets.entries[p] = predicted;
  }
  return out;
}

/// Disentangling starts once `warmup_epochs` full epochs have elapsed.
inline bool is_disentangling_active(int epoch, const CldConfig& cfg) {
  require(epoch >= 0, "invalid_argument", "epoch must be >= 0");
  return epoch >= cfg.warmup_epochs;
}

inline std::string to_string(CldStrategy s) { return s == CldStrategy::kStrategy1 ? "strategy1" : "strategy2"; }

inline CldStrategy parse_cld_strategy(const std::string& s) {
  if (s == "strategy1" || s == "STRATEGY_1" || s == "1") return CldStrategy::kStrategy1;
  if (s == "strategy2" || s == "STRATEGY_2" || s == "2") return CldStrategy::kStrategy2;
  throw Error("invalid_config", "unknown cld.strategy '" + s + "'");
}

inline std::string to_string(TargetSource s) { return s == TargetSource::kVote ? "vote" : "given"; }

inline TargetSource parse_target_source(const std::string& s) {
  if (s == "vote") return TargetSource::kVote;
  if (s == "given") return TargetSource::kGiven;
  throw Error("invalid_config", "unknown cld.target_source '" + s + "'");
}

}  // namespace denoise_seg
