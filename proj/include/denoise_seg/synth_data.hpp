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

// Deterministic fundus-like synthetic data: textured background with nested
// concentric ellipses (category 1 = disk, category 2 = cup, and further
// categories nested deeper when num_categories > 3). Ellipse areas are
// chosen so that dataset-level category fractions approach the targets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "denoise_seg/error.hpp"
#include "denoise_seg/parallel.hpp"
#include "denoise_seg/raster.hpp"
#include "denoise_seg/rng.hpp"

namespace denoise_seg {

struct SynthSpec {
  int num_images = 200;
  int height = 128;
  int width = 128;
  int channels = 3;
  int num_categories = 3;
  // Background / disk / cup fractions of a heavily imbalanced fundus set.
  std::vector<double> target_fractions{0.9899, 0.0081, 0.0020};
  std::uint64_t seed = 0;
  double cup_missing_prob = 0.1;
  double area_jitter = 0.2;   // per-image relative area jitter, mean preserving
  double noise_sigma = 0.06;  // per-pixel Gaussian texture

  void validate() const {
    require(num_images >= 0, "invalid_config", "num_images must be >= 0");
    require(height >= 8 && width >= 8, "invalid_config", "synthetic images must be at least 8x8");
    require(channels >= 1, "invalid_config", "channels must be >= 1");
    require(num_categories >= 2 && num_categories <= 255, "invalid_config", "num_categories must be in [2, 255]");
    require(static_cast<int>(target_fractions.size()) == num_categories, "invalid_config",
            "target_fractions needs one entry per category");
    double sum = 0.0;
    for (double f : target_fractions) {
      require(f >= 0.0, "invalid_config", "target fractions must be nonnegative");
      sum += f;
    }
    require(std::abs(sum - 1.0) < 1e-6, "invalid_config", "target fractions must sum to 1");
    require(cup_missing_prob >= 0.0 && cup_missing_prob <= 1.0, "invalid_config",
            "cup_missing_prob must be in [0,1]");
    require(area_jitter >= 0.0 && area_jitter < 1.0, "invalid_config", "area_jitter must be in [0,1)");
  }
};

struct Sample {
  Image image;
  LabelMap labels;  // given (possibly noisy) annotation
  LabelMap clean;   // ground truth, used only for evaluation
};

namespace detail {

// Mean colour of category k, fundus-like: reddish background, brighter disk,
// brightest cup.
inline float category_intensity(int category, int num_categories, int channel) {
  static constexpr float kBackground[3] = {0.55f, 0.25f, 0.15f};
  static constexpr float kSpan[3] = {0.40f, 0.55f, 0.45f};
  const int ch = channel % 3;
  const float t = static_cast<float>(category) / static_cast<float>(num_categories - 1);
  return kBackground[ch] + t * kSpan[ch];
}

// Ellipse area (pixels) for each nested category level k >= 1, before jitter.
// Level k covers categories k..Y-1. The innermost level is inflated so that
// its expected fraction survives being dropped with cup_missing_prob.
inline std::vector<double> nested_areas(const SynthSpec& spec) {
  const int y = spec.num_categories;
  const double pixels = static_cast<double>(spec.height) * spec.width;
  std::vector<double> areas(y, 0.0);
  for (int k = 1; k < y; ++k) {
    double tail = 0.0;
    for (int j = k; j < y; ++j) tail += spec.target_fractions[j];
    areas[k] = tail * pixels;
  }
  if (y >= 3) {
    const double keep = 1.0 - spec.cup_missing_prob;
    areas[y - 1] = keep > 0.0 ? spec.target_fractions[y - 1] * pixels / keep : 0.0;
    require(areas[y - 1] < areas[y - 2] || areas[y - 1] == 0.0, "infeasible_geometry",
            "innermost category area does not fit inside its parent region");
  }
  return areas;
}

}  // namespace detail

/// Image and clean label map for sample `index`; deterministic in (seed, index).
inline std::pair<Image, LabelMap> generate_sample(const SynthSpec& spec, std::size_t index) {
  spec.validate();
  require(index < static_cast<std::size_t>(spec.num_images), "invalid_argument",
          "sample index " + std::to_string(index) + " >= num_images");
  Rng rng = make_rng(spec.seed, {kSynthStream, index});
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int h = spec.height;
  const int w = spec.width;
  const int y = spec.num_categories;
  const auto areas = detail::nested_areas(spec);

  const double scale = 1.0 + spec.area_jitter * (2.0 * unit(rng) - 1.0);
  const double aspect = 0.85 + 0.3 * unit(rng);  // semi-axis ratio b/a
  const bool inner_present = y < 3 || unit(rng) >= spec.cup_missing_prob;

  // Outer semi-axes; inner levels are concentric scaled copies.
  const double outer_area = areas[1] * scale;
  const double a_outer = std::sqrt(outer_area / (std::numbers::pi * aspect));
  const double b_outer = a_outer * aspect;
  const double margin = 2.0;
  const double cx_lo = a_outer + margin, cx_hi = w - 1 - a_outer - margin;
  const double cy_lo = b_outer + margin, cy_hi = h - 1 - b_outer - margin;
  require(outer_area > 0.0 && cx_lo <= cx_hi && cy_lo <= cy_hi, "infeasible_geometry",
          "target fractions cannot be realised at " + std::to_string(h) + "x" + std::to_string(w));
  const double cx = cx_lo + (cx_hi - cx_lo) * unit(rng);
  const double cy = cy_lo + (cy_hi - cy_lo) * unit(rng);

  // Squared relative radius per level: pixel is inside level k iff
  // (dx/a)^2 + (dy/b)^2 <= areas[k] / areas[1].
  std::vector<double> level_r2(y, 0.0);
  for (int k = 1; k < y; ++k) level_r2[k] = areas[k] / areas[1];
  if (!inner_present) level_r2[y - 1] = -1.0;

  LabelMap labels(h, w, y);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double dx = (c - cx) / a_outer;
      const double dy = (r - cy) / b_outer;
      const double d2 = dx * dx + dy * dy;
      int cat = 0;
      for (int k = 1; k < y; ++k) {
        if (d2 <= level_r2[k]) cat = k;
      }
      labels.at(r, c) = static_cast<Category>(cat);
    }
  }

  // Intensity: category mean + smooth illumination falloff + Gaussian texture.
  Image image(h, w, spec.channels);
  std::normal_distribution<float> noise(0.0f, static_cast<float>(spec.noise_sigma));
  const float gain = static_cast<float>(0.9 + 0.2 * unit(rng));
  const double diag = std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double rr = std::hypot(r - cy, c - cx) / diag;
      const float falloff = static_cast<float>(1.0 - 0.35 * rr);
      const int cat = labels.at(r, c);
      for (int ch = 0; ch < spec.channels; ++ch) {
        float v = gain * falloff * detail::category_intensity(cat, y, ch) + noise(rng);
        v = std::clamp(v, 0.0f, 1.0f);
        image.at(r, c, ch) = std::round(v * 255.0f) / 255.0f;
      }
    }
  }
  return {std::move(image), std::move(labels)};
}

/// Whole synthetic set with given labels equal to the clean labels.
inline std::vector<Sample> generate_dataset(const SynthSpec& spec) {
  spec.validate();
  std::vector<Sample> samples(spec.num_images);
  parallel_for(samples.size(), [&](std::size_t i) {
    auto [image, labels] = generate_sample(spec, i);
    samples[i] = Sample{std::move(image), labels, labels};
  });
  return samples;
}

}  // namespace denoise_seg
