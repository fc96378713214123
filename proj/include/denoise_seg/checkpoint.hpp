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

// Single-file checkpoint: training configuration, progress counters, every
// named parameter with its momentum buffer, and batch-norm running moments.
// Stored as a cereal portable binary archive; save/load is bit-exact.

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/map.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "denoise_seg/config.hpp"
#include "denoise_seg/dual_stream_model.hpp"
#include "denoise_seg/error.hpp"

namespace denoise_seg {

inline constexpr std::uint32_t kCheckpointMagic = 0x44534b31;  // "DSK1"

struct Checkpoint {
  KeyValues config;
  int epochs_done = 0;
  std::uint64_t global_step = 0;
  int in_channels = 0;
  int num_categories = 0;
  std::map<std::string, std::vector<float>> params;
  std::map<std::string, std::vector<float>> velocities;
  std::map<std::string, std::vector<float>> buffers;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(config, epochs_done, global_step, in_channels, num_categories, params, velocities, buffers);
  }
};

inline Checkpoint capture_checkpoint(DualStreamModel<float>& model, const TrainConfig& cfg, int epochs_done,
                                     std::uint64_t global_step) {
  Checkpoint ck;
  ck.config = cfg.to_key_values();
  ck.config.erase("out_dir");
  ck.epochs_done = epochs_done;
  ck.global_step = global_step;
  ck.in_channels = model.config().in_channels;
  ck.num_categories = model.config().num_categories;
  for (auto* p : model.parameters()) {
    ck.params[p->name] = p->value;
    ck.velocities[p->name] = p->velocity;
  }
  for (auto* b : model.buffers()) ck.buffers[b->name] = b->value;
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "io_error", "cannot write checkpoint " + path);
  cereal::PortableBinaryOutputArchive ar(out);
  ar(kCheckpointMagic, ck);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io_error", "cannot open checkpoint " + path);
  Checkpoint ck;
  std::uint32_t magic = 0;
  try {
    cereal::PortableBinaryInputArchive ar(in);
    ar(magic);
    require(magic == kCheckpointMagic, "invalid_format", path + " is not a checkpoint");
    ar(ck);
  } catch (const cereal::Exception& e) {
    throw Error("invalid_format", "corrupt checkpoint " + path + ": " + e.what());
  }
  return ck;
}

/// Copies checkpoint state into a model of matching architecture.
inline void restore_model(DualStreamModel<float>& model, const Checkpoint& ck) {
  auto fetch = [&](const std::map<std::string, std::vector<float>>& table, const std::string& name,
                   std::size_t size) -> const std::vector<float>& {
    auto it = table.find(name);
    require(it != table.end(), "invalid_format", "checkpoint lacks tensor " + name);
    require(it->second.size() == size, "invalid_format", "checkpoint tensor " + name + " has the wrong size");
    return it->second;
  };
  for (auto* p : model.parameters()) {
    p->value = fetch(ck.params, p->name, p->value.size());
    p->velocity = fetch(ck.velocities, p->name, p->velocity.size());
  }
  for (auto* b : model.buffers()) b->value = fetch(ck.buffers, b->name, b->value.size());
}

inline DualStreamModel<float> model_from_checkpoint(const Checkpoint& ck) {
  const TrainConfig cfg = TrainConfig::from_key_values(ck.config);
  DualStreamModel<float> model(cfg.model_config(ck.in_channels, ck.num_categories));
  restore_model(model, ck);
  return model;
}

}  // namespace denoise_seg
