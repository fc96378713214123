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

// Training loop: warm-up on all given labels, then per-batch clean-label
// disentangling and class-balanced sampling on the clean stream, with the
// noisy stream always supervised by the given labels. Every random choice is
// drawn from a stream derived from (seed, purpose, position), so two runs
// with the same configuration are bit-identical.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "denoise_seg/balanced_sampler.hpp"
#include "denoise_seg/checkpoint.hpp"
#include "denoise_seg/config.hpp"
#include "denoise_seg/dataset_io.hpp"
#include "denoise_seg/dual_stream_model.hpp"
#include "denoise_seg/losses_metrics.hpp"
#include "denoise_seg/mask_sampler.hpp"

namespace denoise_seg {

/// lr0 * (1 - iter/max_iter)^power.
inline double poly_lr(long iter, long max_iter, double lr0, double power) {
  require(iter >= 0 && iter <= max_iter, "invalid_argument", "poly_lr needs 0 <= iter <= max_iter");
  if (max_iter == 0) return lr0;
  return lr0 * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

/// Learning rate of optimizer step `step` out of `total_steps`; the last step
/// runs at exactly 0.
inline double scheduled_lr(long step, long total_steps, double lr0, double power) {
  return poly_lr(step, std::max(0L, total_steps - 1), lr0, power);
}

struct DataSplit {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

/// Holds out the trailing round(val_fraction * N) samples.
inline DataSplit split_dataset(std::vector<Sample> samples, double val_fraction) {
  const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(samples.size())));
  require(n_val < samples.size(), "invalid_config", "validation split leaves no training samples");
  DataSplit out;
  out.val.assign(std::make_move_iterator(samples.end() - static_cast<std::ptrdiff_t>(n_val)),
                 std::make_move_iterator(samples.end()));
  samples.resize(samples.size() - n_val);
  out.train = std::move(samples);
  return out;
}

/// Eval-mode argmax of the clean-stream output.
inline std::vector<LabelMap> predict(DualStreamModel<float>& model, const std::vector<Sample>& samples,
                                     int batch_size = 8) {
  std::vector<LabelMap> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<const Image*> imgs;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) imgs.push_back(&samples[i].image);
    const auto fw = model.forward(make_batch<float>(imgs), nn::Mode::kEval);
    for (std::size_t i = 0; i < imgs.size(); ++i) {
      out.push_back(argmax_confidence(prob_map_at(fw.clean_probs, static_cast<int>(i))).predicted);
    }
  }
  return out;
}

/// Mean per-image IoU/Dice of predictions against clean labels.
inline SegmentationSummary evaluate_model(DualStreamModel<float>& model, const std::vector<Sample>& samples) {
  require(!samples.empty(), "invalid_argument", "nothing to evaluate");
  ScoreAccumulator acc(model.config().num_categories);
  const auto preds = predict(model, samples);
  for (std::size_t i = 0; i < samples.size(); ++i) acc.add(preds[i], samples[i].clean);
  return acc.summary();
}

/// Retained annotations under CLD alone, CBS alone (on all given labels) and
/// CLD followed by CBS, counted per category over `samples`.
struct RetentionStats {
  ClassCounts all, cld, cbs, cld_cbs;

  double fraction(const ClassCounts& c) const {
    return all.total() == 0 ? 0.0 : static_cast<double>(c.total()) / static_cast<double>(all.total());
  }
};

inline RetentionStats retention_stats(DualStreamModel<float>& model, const std::vector<Sample>& samples,
                                      const CldConfig& cld, const CbsConfig& cbs, int batch_size = 8) {
  const int y = model.config().num_categories;
  RetentionStats st;
  for (auto* c : {&st.all, &st.cld, &st.cbs, &st.cld_cbs}) c->counts.assign(y, 0);
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<const Image*> imgs;
    const std::size_t end = std::min(samples.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) imgs.push_back(&samples[i].image);
    const auto fw = model.forward(make_batch<float>(imgs), nn::Mode::kEval);
    for (std::size_t i = start; i < end; ++i) {
      const LabelMap& given = samples[i].labels;
      const auto ones = SelectionMask::ones(given.height, given.width);
      const auto sel = sample_clean_mask(prob_map_at(fw.clean_probs, static_cast<int>(i - start)), given, cld);
      Rng r1 = make_rng(cbs.seed, {kCbsStream, 0, i});
      Rng r2 = make_rng(cbs.seed, {kCbsStream, 1, i});
      const auto cbs_mask = sample_balanced_mask(given, ones, cbs, r1);
      const auto both = sample_balanced_mask(sel.targets, sel.mask, cbs, r2);
      st.all += class_histogram(given, ones);
      st.cld += class_histogram(sel.targets, sel.mask);
      st.cbs += class_histogram(given, cbs_mask);
      st.cld_cbs += class_histogram(sel.targets, both);
    }
  }
  return st;
}

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double loss_clean = 0.0;
  double loss_noisy = 0.0;
  double lr_last = 0.0;
  bool disentangling = false;
  ClassCounts selected;  // supervised clean-stream pixels per target category
  std::size_t pixels = 0;
  std::optional<SegmentationSummary> eval;
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, DataSplit data)
      : cfg_((cfg.validate(), std::move(cfg))),
        data_(std::move(data)),
        model_(cfg_.model_config(check_data(data_).train.front().image.channels,
                                 data_.train.front().labels.num_categories)) {
    cfg_.cbs.seed = cfg_.seed;
    model_.init(cfg_.seed);
    steps_per_epoch_ = static_cast<long>((data_.train.size() + cfg_.batch_size - 1) / cfg_.batch_size);
    total_steps_ = steps_per_epoch_ * cfg_.epochs;
  }

  const TrainConfig& config() const { return cfg_; }
  DualStreamModel<float>& model() { return model_; }
  const DataSplit& data() const { return data_; }
  long total_steps() const { return total_steps_; }
  std::uint64_t global_step() const { return step_; }

  /// Optional observer of the masks fed to the clean-stream loss; called once
  /// per batch with (epoch, sample indices, cld masks, cbs masks).
  std::function<void(int, const std::vector<std::size_t>&, const std::vector<SelectionMask>&,
                     const std::vector<SelectionMask>&)>
      mask_observer;

  EpochLog train_epoch(int epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.disentangling = is_disentangling_active(epoch, cfg_.cld);
    log.selected.counts.assign(num_categories(), 0);
    std::vector<std::size_t> order(data_.train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = make_rng(cfg_.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0, clean_sum = 0.0, noisy_sum = 0.0;
    for (long b = 0; b < steps_per_epoch_; ++b) {
      const std::size_t start = static_cast<std::size_t>(b) * cfg_.batch_size;
      const std::vector<std::size_t> idx(order.begin() + start,
                                         order.begin() + std::min(order.size(), start + cfg_.batch_size));
      const auto r = train_step(epoch, idx, log);
      loss_sum += r[0];
      clean_sum += r[1];
      noisy_sum += r[2];
    }
    log.loss = loss_sum / steps_per_epoch_;
    log.loss_clean = clean_sum / steps_per_epoch_;
    log.loss_noisy = noisy_sum / steps_per_epoch_;
    return log;
  }

  SegmentationSummary evaluate() {
    return evaluate_model(model_, data_.val.empty() ? data_.train : data_.val);
  }
  std::string eval_split() const { return data_.val.empty() ? "train" : "val"; }

 private:
  static const DataSplit& check_data(const DataSplit& d) {
    require(!d.train.empty(), "invalid_argument", "training split is empty");
    return d;
  }
  int num_categories() const { return data_.train.front().labels.num_categories; }

  // Returns {total, clean, noisy} loss of the step.
  std::array<double, 3> train_step(int epoch, const std::vector<std::size_t>& idx, EpochLog& log) {
    std::vector<const Image*> imgs;
    std::vector<LabelMap> given;
    for (auto i : idx) {
      imgs.push_back(&data_.train[i].image);
      given.push_back(data_.train[i].labels);
    }
    const auto x = make_batch<float>(imgs);
    const auto fw = model_.forward(x, nn::Mode::kTrain);

    std::vector<LabelMap> targets = given;
    std::vector<SelectionMask> cld_masks, cbs_masks;
    const bool active = is_disentangling_active(epoch, cfg_.cld);
    if (active && (uses_cld(cfg_.ablation) || uses_cbs(cfg_.ablation))) {
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const LabelMap& g = given[j];
        SelectionMask cld_mask = SelectionMask::ones(g.height, g.width);
        if (uses_cld(cfg_.ablation)) {
          auto sel = sample_clean_mask(prob_map_at(fw.clean_probs, static_cast<int>(j)), g, cfg_.cld);
          cld_mask = std::move(sel.mask);
          targets[j] = std::move(sel.targets);
        }
        SelectionMask cbs_mask = SelectionMask::ones(g.height, g.width);
        if (uses_cbs(cfg_.ablation)) {
          Rng rng = cfg_.cbs.resample_each_batch ? make_rng(cfg_.seed, {kCbsStream, step_, j})
                                                 : make_rng(cfg_.seed, {kCbsStream, idx[j]});
          cbs_mask = sample_balanced_mask(targets[j], cld_mask, cfg_.cbs, rng);
        }
        cld_masks.push_back(std::move(cld_mask));
        cbs_masks.push_back(std::move(cbs_mask));
      }
    }
    if (mask_observer) {
      std::vector<SelectionMask> shown_cld = cld_masks, shown_cbs = cbs_masks;
      if (shown_cld.empty()) {
        for (const auto& g : given) {
          shown_cld.push_back(SelectionMask::ones(g.height, g.width));
          shown_cbs.push_back(SelectionMask::ones(g.height, g.width));
        }
      }
      mask_observer(epoch, idx, shown_cld, shown_cbs);
    }

    auto clean = masked_ce_with_grad(fw.clean_probs, std::span<const LabelMap>(targets),
                                     std::span<const SelectionMask>(cld_masks),
                                     std::span<const SelectionMask>(cbs_masks));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& t = targets[j];
      for (std::size_t p = 0; p < t.pixel_count(); ++p) {
        const bool sel = cld_masks.empty() || (cld_masks[j].entries[p] && cbs_masks[j].entries[p]);
        if (sel) ++log.selected.counts[t.entries[p]];
      }
      log.pixels += t.pixel_count();
    }
    scale(clean.grad_logits, cfg_.weights.lambda1);
    double noisy_loss = 0.0;
    nn::Tensor<float> noisy_grad;
    if (model_.config().noisy_stream) {
      auto noisy = masked_ce_with_grad(fw.noisy_probs, std::span<const LabelMap>(given));
      noisy_loss = noisy.loss;
      noisy_grad = std::move(noisy.grad_logits);
      scale(noisy_grad, cfg_.weights.lambda2);
    }
    const double loss = total_loss(clean.loss, noisy_loss, cfg_.weights);
    require(std::isfinite(loss), "nan_loss",
            "non-finite loss at epoch " + std::to_string(epoch) + " step " + std::to_string(step_) +
                " (clean " + std::to_string(clean.loss) + ", noisy " + std::to_string(noisy_loss) + ")");

    model_.zero_grad();
    model_.backward(clean.grad_logits, noisy_grad);
    const double lr = scheduled_lr(static_cast<long>(step_), total_steps_, cfg_.lr0, cfg_.poly_power);
    sgd_update(static_cast<float>(lr));
    log.lr_last = lr;
    ++step_;
    return {loss, clean.loss, noisy_loss};
  }

  static void scale(nn::Tensor<float>& t, double s) {
    for (auto& v : t.data) v *= static_cast<float>(s);
  }

  void sgd_update(float lr) {
    const auto mu = static_cast<float>(cfg_.momentum);
    const auto wd = static_cast<float>(cfg_.weight_decay);
    for (auto* p : model_.parameters()) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const float g = p->grad[i] + wd * p->value[i];
        p->velocity[i] = mu * p->velocity[i] + g;
        p->value[i] -= lr * p->velocity[i];
      }
    }
  }

  TrainConfig cfg_;
  DataSplit data_;
  DualStreamModel<float> model_;
  long steps_per_epoch_ = 0;
  long total_steps_ = 0;
  std::uint64_t step_ = 0;
};

inline nlohmann::json metric_records(int epoch, const std::string& split, const SegmentationSummary& s) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t k = 0; k < s.iou.size(); ++k) {
    out.push_back({{"epoch", epoch}, {"split", split}, {"category", k}, {"iou", s.iou[k]}, {"dice", s.dice[k]}});
  }
  return out;
}

struct TrainResult {
  SegmentationSummary final_eval;
  std::vector<EpochLog> epochs;
};

/// Full run: reads cfg.data_dir, trains, and writes to cfg.out_dir
///   metrics.jsonl   {epoch, split, category, iou, dice} per evaluated epoch
///   train.jsonl     per-epoch losses, learning rate and supervision counts
///   checkpoint.bin  latest state (rewritten every epoch)
///   run.json        configuration and final foreground scores
inline TrainResult train(const TrainConfig& cfg_in, std::ostream* progress = nullptr) {
  namespace fs = std::filesystem;
  TrainConfig cfg = cfg_in;
  cfg.validate();
  require(!cfg.data_dir.empty(), "invalid_config", "data_dir is required");
  require(!cfg.out_dir.empty(), "invalid_config", "out_dir is required");
  Trainer trainer(cfg, split_dataset(read_dataset(cfg.data_dir), cfg.val_fraction));
  fs::create_directories(cfg.out_dir);
  std::ofstream metrics(fs::path(cfg.out_dir) / "metrics.jsonl", std::ios::trunc);
  std::ofstream train_log(fs::path(cfg.out_dir) / "train.jsonl", std::ios::trunc);
  const auto ckpt_path = (fs::path(cfg.out_dir) / "checkpoint.bin").string();

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochLog log = trainer.train_epoch(epoch);
    const bool last = epoch + 1 == cfg.epochs;
    if (last || (epoch + 1) % cfg.eval_every == 0) {
      log.eval = trainer.evaluate();
      for (const auto& rec : metric_records(epoch, trainer.eval_split(), *log.eval)) metrics << rec.dump() << "\n";
      metrics.flush();
    }
    train_log << nlohmann::json{{"epoch", epoch},
                                {"loss", log.loss},
                                {"loss_clean", log.loss_clean},
                                {"loss_noisy", log.loss_noisy},
                                {"lr", log.lr_last},
                                {"disentangling", log.disentangling},
                                {"selected_counts", log.selected.counts},
                                {"pixels", log.pixels}}
                     .dump()
              << "\n";
    train_log.flush();
    save_checkpoint(ckpt_path, capture_checkpoint(trainer.model(), trainer.config(), epoch + 1,
                                                  trainer.global_step()));
    if (progress) {
      *progress << "epoch " << epoch << " loss " << log.loss;
      if (log.eval) *progress << " fg_iou " << log.eval->foreground_iou();
      *progress << std::endl;
    }
    result.epochs.push_back(std::move(log));
  }
  result.final_eval = *result.epochs.back().eval;
  nlohmann::json run{{"config", trainer.config().to_key_values()},
                     {"final", {{"split", trainer.eval_split()},
                                {"iou", result.final_eval.iou},
                                {"dice", result.final_eval.dice},
                                {"foreground_iou", result.final_eval.foreground_iou()},
                                {"foreground_dice", result.final_eval.foreground_dice()}}}};
  std::ofstream(fs::path(cfg.out_dir) / "run.json") << run.dump(2) << "\n";
  return result;
}

/// Scores a checkpoint against clean labels. `split` is "train", "val" or
/// "all"; the split boundary comes from the checkpoint's configuration.
inline SegmentationSummary evaluate(const std::string& checkpoint_path, const std::string& data_dir,
                                    const std::string& split = "val") {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const TrainConfig cfg = TrainConfig::from_key_values(ck.config);
  read_dataset_meta(data_dir);
  require(std::filesystem::exists(std::filesystem::path(data_dir) / "clean"), "missing_clean_labels",
          "evaluation needs clean labels under " + data_dir + "/clean");
  auto samples = read_dataset(data_dir, true);
  auto model = model_from_checkpoint(ck);
  if (split == "all") return evaluate_model(model, samples);
  auto parts = split_dataset(std::move(samples), cfg.val_fraction);
  if (split == "train") return evaluate_model(model, parts.train);
  require(split == "val", "invalid_argument", "split must be train, val or all");
  return evaluate_model(model, parts.val.empty() ? parts.train : parts.val);
}

}  // namespace denoise_seg
