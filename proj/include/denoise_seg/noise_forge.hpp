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

// Label corruption by random erosion/dilation of each foreground category
// (JED noise), plus ingestion of externally produced noisy label files.

#include <random>
#include <string>
#include <vector>

#include "denoise_seg/error.hpp"
#include "denoise_seg/morphology.hpp"
#include "denoise_seg/raster.hpp"
#include "denoise_seg/raster_io.hpp"
#include "denoise_seg/rng.hpp"

namespace denoise_seg {

struct JedSpec {
  int kernel_min = 2;
  int kernel_max = 5;
  int iter_min = 3;
  int iter_max = 8;
  std::uint64_t seed = 0;

  void validate() const {
    require(kernel_min >= 1 && kernel_min <= kernel_max, "invalid_config",
            "JED kernel range must satisfy 1 <= kernel_min <= kernel_max");
    require(iter_min >= 1 && iter_min <= iter_max, "invalid_config",
            "JED iteration range must satisfy 1 <= iter_min <= iter_max");
  }
};

enum class MorphOp { kErode, kDilate };

struct JedDraw {
  int category = 0;
  MorphOp op = MorphOp::kErode;
  int kernel = 1;
  int iterations = 1;
};

struct JedResult {
  LabelMap labels;
  std::vector<JedDraw> draws;
  bool no_foreground = false;  // input had nothing to corrupt
};

/// Applies the given per-category draws in order. Each category's region is
/// taken from the *original* map; eroded-away pixels still carrying that
/// category revert to background (0) and dilated pixels overwrite whatever
/// they land on, so later categories win conflicts.
inline LabelMap apply_jed_draws(const LabelMap& labels, const std::vector<JedDraw>& draws) {
  LabelMap out = labels;
  for (const auto& d : draws) {
    const SelectionMask original = category_mask(labels, d.category);
    SelectionMask region = original;
    for (int it = 0; it < d.iterations; ++it) {
      region = d.op == MorphOp::kErode ? binary_erode(region, d.kernel) : binary_dilate(region, d.kernel);
    }
    for (std::size_t p = 0; p < out.pixel_count(); ++p) {
      if (original.entries[p] && !region.entries[p]) {
        if (out.entries[p] == d.category) out.entries[p] = 0;
      } else if (!original.entries[p] && region.entries[p]) {
        out.entries[p] = static_cast<Category>(d.category);
      }
    }
  }
  return out;
}

/// One (op, kernel, iterations) draw per present foreground category, in
/// ascending category order.
inline JedResult jed_corrupt(const LabelMap& labels, const JedSpec& spec, Rng& rng) {
  spec.validate();
  labels.validate();
  const ClassCounts counts = class_histogram(labels);
  JedResult result;
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> kernel_dist(spec.kernel_min, spec.kernel_max);
  std::uniform_int_distribution<int> iter_dist(spec.iter_min, spec.iter_max);
  for (int c = 1; c < labels.num_categories; ++c) {
    if (counts.counts[c] == 0) continue;
    JedDraw d;
    d.category = c;
    d.op = coin(rng) ? MorphOp::kDilate : MorphOp::kErode;
    d.kernel = kernel_dist(rng);
    d.iterations = iter_dist(rng);
    result.draws.push_back(d);
  }
  if (result.draws.empty()) {
    result.labels = labels;
    result.no_foreground = true;
    return result;
  }
  result.labels = apply_jed_draws(labels, result.draws);
  return result;
}

/// Per-image stream derived from (spec.seed, image_index).
inline JedResult jed_corrupt(const LabelMap& labels, const JedSpec& spec, std::size_t image_index) {
  Rng rng = make_rng(spec.seed, {kJedStream, image_index});
  return jed_corrupt(labels, spec, rng);
}

/// Loads a noisy label file produced elsewhere (e.g. by a source-domain
/// model) without modification.
inline LabelMap ingest_external_labels(const std::string& path, int num_categories) {
  return read_label_map(path, num_categories);
}

}  // namespace denoise_seg
