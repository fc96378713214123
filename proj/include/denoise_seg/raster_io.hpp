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

// Lossless raster files (PNG). Images load as 8- or 16-bit and are rescaled
// to [0,1]; label maps are single-channel 8-bit files whose pixel value is
// the category index.

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "denoise_seg/error.hpp"
#include "denoise_seg/raster.hpp"

namespace denoise_seg {

namespace detail {

struct PngRaw {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> data;  // 16-bit samples are big-endian
};

using FileHandle = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

inline FileHandle open_file(const std::string& path, const char* mode) {
  FileHandle fp(std::fopen(path.c_str(), mode), &std::fclose);
  require(fp != nullptr, "io_error", "cannot open " + path);
  return fp;
}

inline PngRaw read_png_raw(const std::string& path) {
  auto fp = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, "io_error", "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngRaw raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("io_error", "malformed PNG file " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  const int color_type = png_get_color_type(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && raw.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  raw.channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  raw.data.resize(row_bytes * raw.height);
  rows.resize(raw.height);
  for (int r = 0; r < raw.height; ++r) rows[r] = raw.data.data() + row_bytes * r;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return raw;
}

inline void write_png_raw(const std::string& path, int width, int height, int channels,
                          const std::vector<std::uint8_t>& data) {
  auto fp = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, "io_error", "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("io_error", "failed writing PNG file " + path);
  }
  png_init_io(png, fp.get());
  const int color_type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * channels;
  for (int r = 0; r < height; ++r) rows[r] = const_cast<png_bytep>(data.data() + row_bytes * r);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline Image read_image(const std::string& path) {
  const auto raw = detail::read_png_raw(path);
  Image img(raw.height, raw.width, raw.channels);
  const std::size_t n = img.values.size();
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = (static_cast<unsigned>(raw.data[2 * i]) << 8) | raw.data[2 * i + 1];
      img.values[i] = static_cast<float>(v) / 65535.0f;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) img.values[i] = static_cast<float>(raw.data[i]) / 255.0f;
  }
  return img;
}

/// Writes 8-bit gray or RGB. Values that are exact multiples of 1/255 survive
/// a write/read round trip bit-exactly.
inline void write_image(const std::string& path, const Image& img) {
  require(img.channels == 1 || img.channels == 3, "invalid_shape", "only 1- or 3-channel images can be written");
  std::vector<std::uint8_t> data(img.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.values[i], 0.0f, 1.0f) * 255.0f));
  }
  detail::write_png_raw(path, img.width, img.height, img.channels, data);
}

inline LabelMap read_label_map(const std::string& path, int num_categories) {
  const auto raw = detail::read_png_raw(path);
  require(raw.channels == 1 && raw.bit_depth == 8, "invalid_format",
          "label file must be single-channel 8-bit: " + path);
  LabelMap labels(raw.height, raw.width, num_categories);
  for (std::size_t i = 0; i < labels.entries.size(); ++i) {
    const int v = raw.data[i];
    require(v < num_categories, "category_out_of_range",
            "category index " + std::to_string(v) + " out of range [0, " + std::to_string(num_categories) +
                ") in " + path);
    labels.entries[i] = static_cast<Category>(v);
  }
  return labels;
}

inline void write_label_map(const std::string& path, const LabelMap& labels) {
  detail::write_png_raw(path, labels.width, labels.height, 1, labels.entries);
}

/// Debug dump: selected pixels white.
inline void write_mask(const std::string& path, const SelectionMask& mask) {
  std::vector<std::uint8_t> data(mask.entries.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask.entries[i] ? 255 : 0;
  detail::write_png_raw(path, mask.width, mask.height, 1, data);
}

}  // namespace denoise_seg
