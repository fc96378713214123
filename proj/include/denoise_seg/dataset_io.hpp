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

// On-disk dataset layout:
//   DIR/meta.json          {"num_categories": Y, "count": N}
//   DIR/images/NNNN.png    input image
//   DIR/labels/NNNN.png    given (possibly noisy) label map
//   DIR/clean/NNNN.png     clean label map, evaluation only

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "denoise_seg/error.hpp"
#include "denoise_seg/parallel.hpp"
#include "denoise_seg/raster_io.hpp"
#include "denoise_seg/synth_data.hpp"

namespace denoise_seg {

inline std::string sample_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu.png", index);
  return buf;
}

inline void write_dataset(const std::string& dir, const std::vector<Sample>& samples) {
  namespace fs = std::filesystem;
  require(!samples.empty(), "invalid_argument", "cannot write an empty dataset");
  const int y = samples.front().clean.num_categories;
  for (const char* sub : {"images", "labels", "clean"}) fs::create_directories(fs::path(dir) / sub);
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto name = sample_file_name(i);
    write_image((fs::path(dir) / "images" / name).string(), samples[i].image);
    write_label_map((fs::path(dir) / "labels" / name).string(), samples[i].labels);
    write_label_map((fs::path(dir) / "clean" / name).string(), samples[i].clean);
  });
  nlohmann::json meta{{"num_categories", y}, {"count", samples.size()}};
  std::ofstream(fs::path(dir) / "meta.json") << meta.dump(2) << "\n";
}

inline void write_dataset(const std::string& dir, const SynthSpec& spec) {
  write_dataset(dir, generate_dataset(spec));
}

struct DatasetMeta {
  int num_categories = 0;
  std::size_t count = 0;
};

inline DatasetMeta read_dataset_meta(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto path = fs::path(dir) / "meta.json";
  require(fs::exists(path), "missing_files", "dataset is missing " + path.string());
  try {
    std::ifstream in(path);
    const auto meta = nlohmann::json::parse(in);
    return DatasetMeta{meta.at("num_categories").get<int>(), meta.at("count").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid_format", "malformed " + path.string() + ": " + e.what());
  }
}

/// Loads every sample; clean labels are optional only when `require_clean`
/// is false (they are then copied from the given labels).
inline std::vector<Sample> read_dataset(const std::string& dir, bool require_clean = true) {
  namespace fs = std::filesystem;
  const DatasetMeta meta = read_dataset_meta(dir);
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < meta.count; ++i) {
    const auto name = sample_file_name(i);
    for (const char* sub : {"images", "labels", "clean"}) {
      if (!require_clean && std::string(sub) == "clean") continue;
      if (!fs::exists(fs::path(dir) / sub / name)) problems.push_back(std::string(sub) + "/" + name);
    }
  }
  if (!problems.empty()) {
    std::string msg = "dataset " + dir + " is missing:";
    for (const auto& p : problems) msg += " " + p;
    throw Error("missing_files", msg);
  }
  std::vector<Sample> samples(meta.count);
  parallel_for(meta.count, [&](std::size_t i) {
    const auto name = sample_file_name(i);
    Sample& s = samples[i];
    s.image = read_image((fs::path(dir) / "images" / name).string());
    s.labels = read_label_map((fs::path(dir) / "labels" / name).string(), meta.num_categories);
    const auto clean_path = fs::path(dir) / "clean" / name;
    s.clean = fs::exists(clean_path) ? read_label_map(clean_path.string(), meta.num_categories) : s.labels;
  });
  for (std::size_t i = 0; i < meta.count; ++i) {
    const Sample& s = samples[i];
    if (!same_extent(s.image, s.labels) || !same_extent(s.labels, s.clean)) {
      problems.push_back(sample_file_name(i) + " (shape mismatch)");
    }
  }
  if (!problems.empty()) {
    std::string msg = "dataset " + dir + " has mismatched files:";
    for (const auto& p : problems) msg += " " + p;
    throw Error("mismatched_files", msg);
  }
  return samples;
}

}  // namespace denoise_seg
