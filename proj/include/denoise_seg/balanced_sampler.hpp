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

// Class-balanced sampling (CBS). Within one image, every category keeps at
// most floor(rho * omega) selected pixels, where omega is the smallest
// nonzero per-category count inside the base mask. Over-cap categories are
// subsampled uniformly without replacement.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <vector>

#include "denoise_seg/error.hpp"
#include "denoise_seg/raster.hpp"
#include "denoise_seg/rng.hpp"

namespace denoise_seg {

struct CbsConfig {
  double rho = 10.0;
  std::uint64_t seed = 0;
  // When false the per-image stream ignores epoch/step, so an unchanged base
  // mask yields the same subsample every time.
  bool resample_each_batch = true;

  void validate() const { require(rho >= 1.0, "invalid_config", "cbs.rho must be >= 1"); }
};

/// Smallest nonzero count, or 0 if every count is zero.
inline std::int64_t min_nonzero_count(const ClassCounts& counts) {
  std::int64_t omega = std::numeric_limits<std::int64_t>::max();
  for (auto c : counts.counts) {
    if (c > 0) omega = std::min(omega, c);
  }
  return omega == std::numeric_limits<std::int64_t>::max() ? 0 : omega;
}

inline std::int64_t balanced_cap(double rho, std::int64_t omega) {
  return static_cast<std::int64_t>(std::floor(rho * static_cast<double>(omega)));
}

inline SelectionMask sample_balanced_mask(const LabelMap& labels, const SelectionMask& base_mask, const CbsConfig& cfg,
                                          Rng& rng) {
  cfg.validate();
  require_same_extent(labels, base_mask, "sample_balanced_mask");
  const ClassCounts counts = class_histogram(labels, base_mask);
  const std::int64_t omega = min_nonzero_count(counts);
  SelectionMask out = base_mask;
  if (omega == 0) return out;
  const std::int64_t cap = balanced_cap(cfg.rho, omega);

  std::vector<std::size_t> members;
  std::vector<std::size_t> kept;
  for (int c = 0; c < labels.num_categories; ++c) {
    if (counts.counts[c] <= cap) continue;
    members.clear();
    for (std::size_t p = 0; p < labels.pixel_count(); ++p) {
      if (base_mask.entries[p] && labels.entries[p] == c) {
        members.push_back(p);
        out.entries[p] = 0;
      }
    }
    kept.clear();
    std::sample(members.begin(), members.end(), std::back_inserter(kept), cap, rng);
    for (auto p : kept) out.entries[p] = 1;
  }
  return out;
}

/// max nonzero count / min nonzero count.
inline double imbalance_ratio(const ClassCounts& counts) {
  const std::int64_t lo = min_nonzero_count(counts);
  require(lo > 0, "invalid_argument", "imbalance_ratio needs at least one nonzero count");
  const std::int64_t hi = *std::max_element(counts.counts.begin(), counts.counts.end());
  return static_cast<double>(hi) / static_cast<double>(lo);
}

}  // namespace denoise_seg
