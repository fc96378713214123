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

// Binary morphology with a k x k square structuring element. For a pixel p
// the neighborhood covers offsets [-(k/2), k-1-(k/2)] on both axes (k=3 gives
// -1..1, k=2 gives -1..0) and is clipped at the image border, so pixels
// outside the raster never participate.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "denoise_seg/error.hpp"
#include "denoise_seg/raster.hpp"

namespace denoise_seg {

namespace detail {

// One separable pass along rows (horizontal) or columns. `want_all` selects
// AND (erosion) versus OR (dilation).
inline std::vector<std::uint8_t> morph_pass(const std::vector<std::uint8_t>& in, int height, int width, int kernel,
                                            bool horizontal, bool want_all) {
  const int lo = -(kernel / 2);
  const int hi = kernel - 1 - kernel / 2;
  std::vector<std::uint8_t> out(in.size());
  const int lines = horizontal ? height : width;
  const int len = horizontal ? width : height;
  const std::size_t step = horizontal ? 1 : static_cast<std::size_t>(width);
  // prefix[i] = number of ones in the line before position i
  std::vector<int> prefix(len + 1);
  for (int line = 0; line < lines; ++line) {
    const std::size_t base = horizontal ? static_cast<std::size_t>(line) * width : static_cast<std::size_t>(line);
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + (in[base + i * step] ? 1 : 0);
    for (int i = 0; i < len; ++i) {
      const int a = std::max(0, i + lo);
      const int b = std::min(len - 1, i + hi);
      const int ones = prefix[b + 1] - prefix[a];
      out[base + i * step] = want_all ? (ones == b - a + 1) : (ones > 0);
    }
  }
  return out;
}

inline SelectionMask morph(const SelectionMask& mask, int kernel, bool erode) {
  require(kernel >= 1, "invalid_argument", "morphology kernel must be >= 1");
  SelectionMask out(mask.height, mask.width);
  auto rows = morph_pass(mask.entries, mask.height, mask.width, kernel, true, erode);
  out.entries = morph_pass(rows, mask.height, mask.width, kernel, false, erode);
  return out;
}

}  // namespace detail

/// output[p] = 1 iff every in-image pixel of p's neighborhood is 1.
inline SelectionMask binary_erode(const SelectionMask& mask, int kernel) { return detail::morph(mask, kernel, true); }

/// output[p] = 1 iff any in-image pixel of p's neighborhood is 1.
inline SelectionMask binary_dilate(const SelectionMask& mask, int kernel) {
  return detail::morph(mask, kernel, false);
}

inline SelectionMask category_mask(const LabelMap& labels, int category) {
  SelectionMask out(labels.height, labels.width);
  for (std::size_t p = 0; p < labels.pixel_count(); ++p) out.entries[p] = labels.entries[p] == category;
  return out;
}

}  // namespace denoise_seg
