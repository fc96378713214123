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

// Raster types shared by every stage: images, index-coded label maps,
// per-pixel probability maps and binary selection masks. All rasters are
// stored row-major with the channel/category axis innermost.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "denoise_seg/error.hpp"

namespace denoise_seg {

using Category = std::uint8_t;

struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c), values(static_cast<std::size_t>(h) * w * c, fill) {
    require(h >= 1 && w >= 1 && c >= 1, "invalid_shape", "image dimensions must be positive");
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  float& at(int r, int c, int ch) { return values[(static_cast<std::size_t>(r) * width + c) * channels + ch]; }
  float at(int r, int c, int ch) const {
    return values[(static_cast<std::size_t>(r) * width + c) * channels + ch];
  }

  void validate() const {
    require(height >= 1 && width >= 1 && channels >= 1, "invalid_shape", "image dimensions must be positive");
    require(values.size() == pixel_count() * channels, "invalid_shape", "image buffer size mismatch");
    for (float v : values) {
      require(std::isfinite(v) && v >= 0.0f && v <= 1.0f, "invalid_value", "image values must lie in [0,1]");
    }
  }

  friend bool operator==(const Image&, const Image&) = default;
};

struct LabelMap {
  int height = 0;
  int width = 0;
  int num_categories = 0;
  std::vector<Category> entries;

  LabelMap() = default;
  LabelMap(int h, int w, int y, Category fill = 0)
      : height(h), width(w), num_categories(y), entries(static_cast<std::size_t>(h) * w, fill) {
    require(h >= 1 && w >= 1, "invalid_shape", "label map dimensions must be positive");
    require(y >= 1 && y <= 256, "invalid_shape", "num_categories must be in [1, 256]");
    require(fill < y, "invalid_value", "fill category out of range");
  }

  std::size_t pixel_count() const { return entries.size(); }
  Category& at(int r, int c) { return entries[static_cast<std::size_t>(r) * width + c]; }
  Category at(int r, int c) const { return entries[static_cast<std::size_t>(r) * width + c]; }

  void validate() const {
    require(height >= 1 && width >= 1, "invalid_shape", "label map dimensions must be positive");
    require(entries.size() == static_cast<std::size_t>(height) * width, "invalid_shape",
            "label map buffer size mismatch");
    for (Category v : entries) {
      require(v < num_categories, "invalid_value",
              "category index " + std::to_string(v) + " >= num_categories " + std::to_string(num_categories));
    }
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

struct SelectionMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> entries;

  SelectionMask() = default;
  SelectionMask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), entries(static_cast<std::size_t>(h) * w, fill) {
    require(h >= 1 && w >= 1, "invalid_shape", "mask dimensions must be positive");
    require(fill <= 1, "invalid_value", "mask entries must be 0 or 1");
  }

  static SelectionMask ones(int h, int w) { return SelectionMask(h, w, 1); }

  std::size_t pixel_count() const { return entries.size(); }
  std::uint8_t& at(int r, int c) { return entries[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return entries[static_cast<std::size_t>(r) * width + c]; }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(entries.begin(), entries.end(), std::uint8_t{1}));
  }

  friend bool operator==(const SelectionMask&, const SelectionMask&) = default;
};

/// Per-pixel categorical distribution, H x W x Y.
template <typename T>
struct BasicProbMap {
  int height = 0;
  int width = 0;
  int num_categories = 0;
  std::vector<T> values;

  BasicProbMap() = default;
  BasicProbMap(int h, int w, int y, T fill = T(0))
      : height(h), width(w), num_categories(y), values(static_cast<std::size_t>(h) * w * y, fill) {
    require(h >= 1 && w >= 1 && y >= 1, "invalid_shape", "probability map dimensions must be positive");
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  T& at(int r, int c, int k) { return values[(static_cast<std::size_t>(r) * width + c) * num_categories + k]; }
  T at(int r, int c, int k) const {
    return values[(static_cast<std::size_t>(r) * width + c) * num_categories + k];
  }
  std::span<const T> pixel(std::size_t p) const {
    return std::span<const T>(values).subspan(p * num_categories, num_categories);
  }
  std::span<T> pixel(std::size_t p) { return std::span<T>(values).subspan(p * num_categories, num_categories); }

  void validate(double tolerance = 1e-5) const {
    require(values.size() == pixel_count() * num_categories, "invalid_shape", "probability buffer size mismatch");
    for (std::size_t p = 0; p < pixel_count(); ++p) {
      double sum = 0.0;
      for (T v : pixel(p)) {
        require(std::isfinite(static_cast<double>(v)) && v >= T(0), "invalid_value",
                "probabilities must be finite and nonnegative");
        sum += static_cast<double>(v);
      }
      require(std::abs(sum - 1.0) <= tolerance, "invalid_value", "probabilities must sum to 1");
    }
  }
};

using ProbMap = BasicProbMap<float>;

struct ClassCounts {
  std::vector<std::int64_t> counts;

  std::int64_t total() const {
    std::int64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }

  ClassCounts& operator+=(const ClassCounts& other) {
    if (counts.size() < other.counts.size()) counts.resize(other.counts.size(), 0);
    for (std::size_t i = 0; i < other.counts.size(); ++i) counts[i] += other.counts[i];
    return *this;
  }
};

template <typename A, typename B>
bool same_extent(const A& a, const B& b) {
  return a.height == b.height && a.width == b.width;
}

template <typename A, typename B>
void require_same_extent(const A& a, const B& b, const char* what) {
  require(same_extent(a, b), "shape_mismatch",
          std::string(what) + ": " + std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
              std::to_string(b.height) + "x" + std::to_string(b.width));
}

/// One-hot view of an index map.
inline ProbMap to_one_hot(const LabelMap& labels) {
  ProbMap out(labels.height, labels.width, labels.num_categories, 0.0f);
  for (std::size_t p = 0; p < labels.pixel_count(); ++p) {
    out.values[p * labels.num_categories + labels.entries[p]] = 1.0f;
  }
  return out;
}

template <typename T>
struct ArgmaxResult {
  LabelMap predicted;
  std::vector<T> confidence;  // H x W, max probability per pixel
};

/// Predicted category and confidence per pixel. Ties go to the lowest index.
template <typename T>
ArgmaxResult<T> argmax_confidence(const BasicProbMap<T>& probs) {
  ArgmaxResult<T> out{LabelMap(probs.height, probs.width, probs.num_categories), std::vector<T>(probs.pixel_count())};
  for (std::size_t p = 0; p < probs.pixel_count(); ++p) {
    auto px = probs.pixel(p);
    int best = 0;
    for (int k = 1; k < probs.num_categories; ++k) {
      if (px[k] > px[best]) best = k;
    }
    out.predicted.entries[p] = static_cast<Category>(best);
    out.confidence[p] = px[best];
  }
  return out;
}

/// Per-category count of pixels selected by `mask`.
inline ClassCounts class_histogram(const LabelMap& labels, const SelectionMask& mask) {
  require_same_extent(labels, mask, "class_histogram");
  ClassCounts out{std::vector<std::int64_t>(labels.num_categories, 0)};
  for (std::size_t p = 0; p < labels.pixel_count(); ++p) {
    if (mask.entries[p]) ++out.counts[labels.entries[p]];
  }
  return out;
}

inline ClassCounts class_histogram(const LabelMap& labels) {
  return class_histogram(labels, SelectionMask::ones(labels.height, labels.width));
}

}  // namespace denoise_seg
