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

// Summaries in the shape of the usual noisy-label ablation tables:
// category distribution before/after sampling, share of retained
// annotations, and per-configuration segmentation scores.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "denoise_seg/balanced_sampler.hpp"
#include "denoise_seg/checkpoint.hpp"
#include "denoise_seg/dataset_io.hpp"
#include "denoise_seg/trainer.hpp"

namespace denoise_seg {

/// Category distribution (percent) of the given labels before and after
/// per-image class-balanced sampling on all-ones base masks.
struct HistogramReport {
  ClassCounts before;
  ClassCounts after;
  double rho = 10.0;
};

inline HistogramReport histogram_report(const std::vector<Sample>& samples, const CbsConfig& cbs, bool use_clean) {
  require(!samples.empty(), "invalid_argument", "empty dataset");
  HistogramReport rep;
  rep.rho = cbs.rho;
  const int y = samples.front().labels.num_categories;
  rep.before.counts.assign(y, 0);
  rep.after.counts.assign(y, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LabelMap& labels = use_clean ? samples[i].clean : samples[i].labels;
    const auto ones = SelectionMask::ones(labels.height, labels.width);
    Rng rng = make_rng(cbs.seed, {kCbsStream, 0, i});
    rep.before += class_histogram(labels, ones);
    rep.after += class_histogram(labels, sample_balanced_mask(labels, ones, cbs, rng));
  }
  return rep;
}

inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%6.2f", 100.0 * v);
  return buf;
}

inline std::vector<double> fractions(const ClassCounts& c) {
  std::vector<double> out(c.counts.size(), 0.0);
  const auto total = c.total();
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = total ? static_cast<double>(c.counts[k]) / static_cast<double>(total) : 0.0;
  }
  return out;
}

inline void print_distribution_row(std::ostream& os, const std::string& name, const ClassCounts& c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-24s", name.c_str());
  os << buf;
  for (double f : fractions(c)) os << " " << percent(f);
  if (min_nonzero_count(c) > 0) {
    std::snprintf(buf, sizeof(buf), "   ratio %8.2f", imbalance_ratio(c));
    os << buf;
  }
  os << "\n";
}

inline void print_distribution_header(std::ostream& os, int num_categories) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-24s", "distribution (%)");
  os << buf;
  for (int k = 0; k < num_categories; ++k) {
    std::snprintf(buf, sizeof(buf), " %6s", ("c" + std::to_string(k)).c_str());
    os << buf;
  }
  os << "\n";
}

inline void print_histogram_report(std::ostream& os, const HistogramReport& rep) {
  print_distribution_header(os, static_cast<int>(rep.before.counts.size()));
  print_distribution_row(os, "w/o CBS", rep.before);
  char name[64];
  std::snprintf(name, sizeof(name), "w/ CBS (rho=%g)", rep.rho);
  print_distribution_row(os, name, rep.after);
}

struct RunSummary {
  std::string dir;
  std::string ablation;
  std::uint64_t seed = 0;
  std::vector<double> iou;
  std::vector<double> dice;
  double foreground_iou = 0.0;
  double foreground_dice = 0.0;
};

/// Reads every run directory (one holding run.json) directly under `runs_dir`.
inline std::vector<RunSummary> load_runs(const std::string& runs_dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(runs_dir), "io_error", runs_dir + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "run.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<RunSummary> out;
  for (const auto& d : dirs) {
    std::ifstream in(d / "run.json");
    const auto j = nlohmann::json::parse(in);
    RunSummary r;
    r.dir = d.string();
    r.ablation = j.at("config").at("ablation").get<std::string>();
    r.seed = std::stoull(j.at("config").at("seed").get<std::string>());
    r.iou = j.at("final").at("iou").get<std::vector<double>>();
    r.dice = j.at("final").at("dice").get<std::vector<double>>();
    r.foreground_iou = j.at("final").at("foreground_iou").get<double>();
    r.foreground_dice = j.at("final").at("foreground_dice").get<double>();
    out.push_back(std::move(r));
  }
  return out;
}

/// Mean final scores per ablation, in fixed ablation order.
inline void print_ablation_table(std::ostream& os, const std::vector<RunSummary>& runs) {
  std::map<std::string, std::vector<const RunSummary*>> by;
  for (const auto& r : runs) by[r.ablation].push_back(&r);
  os << "IoU (%)      runs";
  std::size_t y = runs.empty() ? 0 : runs.front().iou.size();
  for (std::size_t k = 1; k < y; ++k) os << "     c" << k;
  os << "    avg   dice-avg\n";
  for (auto a : {Ablation::kBaseline, Ablation::kCldOnly, Ablation::kCbsOnly, Ablation::kCldCbs, Ablation::kNaCld}) {
    auto it = by.find(to_string(a));
    if (it == by.end()) continue;
    const auto& rs = it->second;
    std::vector<double> iou(y, 0.0);
    double fg = 0.0, fgd = 0.0;
    for (const auto* r : rs) {
      for (std::size_t k = 0; k < y; ++k) iou[k] += r->iou[k] / rs.size();
      fg += r->foreground_iou / rs.size();
      fgd += r->foreground_dice / rs.size();
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-10s %6zu", it->first.c_str(), rs.size());
    os << buf;
    for (std::size_t k = 1; k < y; ++k) os << " " << percent(iou[k]);
    os << " " << percent(fg) << "    " << percent(fgd) << "\n";
  }
}

/// Retention statistics of a trained run on its own training split, using the
/// run's CLD/CBS settings.
inline RetentionStats run_retention(const std::string& run_dir) {
  namespace fs = std::filesystem;
  const Checkpoint ck = load_checkpoint((fs::path(run_dir) / "checkpoint.bin").string());
  TrainConfig cfg = TrainConfig::from_key_values(ck.config);
  cfg.cbs.seed = cfg.seed;
  auto model = model_from_checkpoint(ck);
  auto split = split_dataset(read_dataset(cfg.data_dir), cfg.val_fraction);
  return retention_stats(model, split.train, cfg.cld, cfg.cbs);
}

inline void print_retention(std::ostream& os, const RetentionStats& st) {
  os << "remained annotations (%)   CLD " << percent(st.fraction(st.cld)) << "   CBS "
     << percent(st.fraction(st.cbs)) << "   CLD+CBS " << percent(st.fraction(st.cld_cbs)) << "\n";
  print_distribution_header(os, static_cast<int>(st.all.counts.size()));
  print_distribution_row(os, "w/o CLD, w/o CBS", st.all);
  print_distribution_row(os, "w/ CLD", st.cld);
  print_distribution_row(os, "w/ CBS", st.cbs);
  print_distribution_row(os, "w/ CLD, w/ CBS", st.cld_cbs);
}

}  // namespace denoise_seg
