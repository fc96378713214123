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

// Clean-stream masked cross-entropy, noisy-stream cross-entropy, the joint
// objective, and IoU/Dice evaluation.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "denoise_seg/error.hpp"
#include "denoise_seg/nn/tensor.hpp"
#include "denoise_seg/raster.hpp"

namespace denoise_seg {

inline constexpr double kLogClamp = 1e-12;

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 20.0;

  void validate() const {
    require(lambda1 >= 0.0 && lambda2 >= 0.0, "invalid_config", "loss weights must be >= 0");
  }
};

/// Mean of -log p[target] over pixels where both masks are 1; exactly 0 when
/// nothing is selected.
template <typename T>
double masked_ce(const BasicProbMap<T>& probs, const LabelMap& targets, const SelectionMask& mask_cld,
                 const SelectionMask& mask_cbs) {
  require_same_extent(probs, targets, "masked_ce");
  require_same_extent(targets, mask_cld, "masked_ce");
  require_same_extent(targets, mask_cbs, "masked_ce");
  double sum = 0.0;
  std::size_t selected = 0;
  for (std::size_t p = 0; p < targets.pixel_count(); ++p) {
    if (!(mask_cld.entries[p] && mask_cbs.entries[p])) continue;
    const double pt = static_cast<double>(probs.values[p * probs.num_categories + targets.entries[p]]);
    sum -= std::log(std::max(pt, kLogClamp));
    ++selected;
  }
  return selected == 0 ? 0.0 : sum / static_cast<double>(selected);
}

template <typename T>
double mean_ce(const BasicProbMap<T>& probs, const LabelMap& targets) {
  const auto ones = SelectionMask::ones(targets.height, targets.width);
  return masked_ce(probs, targets, ones, ones);
}

inline double total_loss(double clean_loss, double noisy_loss, const LossWeights& w) {
  return w.lambda1 * clean_loss + w.lambda2 * noisy_loss;
}

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  std::size_t selected = 0;
  nn::Tensor<T> grad_logits;  // d loss / d logits, same shape as probs
};

/// Batch form of masked_ce over softmax outputs, normalised by the number of
/// selected pixels across the whole batch. Also returns the gradient w.r.t.
/// the pre-softmax logits: (p - onehot(target)) * selected / count.
/// Empty mask spans mean "all ones".
template <typename T>
LossAndGrad<T> masked_ce_with_grad(const nn::Tensor<T>& probs, std::span<const LabelMap> targets,
                                   std::span<const SelectionMask> mask_cld = {},
                                   std::span<const SelectionMask> mask_cbs = {}) {
  require(targets.size() == static_cast<std::size_t>(probs.n), "shape_mismatch", "masked_ce: batch size mismatch");
  require(mask_cld.empty() || mask_cld.size() == targets.size(), "shape_mismatch", "masked_ce: mask count mismatch");
  require(mask_cbs.empty() || mask_cbs.size() == targets.size(), "shape_mismatch", "masked_ce: mask count mismatch");
  LossAndGrad<T> out;
  out.grad_logits = nn::Tensor<T>(probs.n, probs.h, probs.w, probs.c);
  const std::size_t per = static_cast<std::size_t>(probs.h) * probs.w;
  const int y = probs.c;
  auto selected_at = [&](std::size_t i, std::size_t p) {
    return (mask_cld.empty() || mask_cld[i].entries[p]) && (mask_cbs.empty() || mask_cbs[i].entries[p]);
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    require(targets[i].height == probs.h && targets[i].width == probs.w, "shape_mismatch",
            "masked_ce: target shape mismatch");
    for (std::size_t p = 0; p < per; ++p) {
      if (!selected_at(i, p)) continue;
      const double pt = static_cast<double>(probs.data[(i * per + p) * y + targets[i].entries[p]]);
      sum -= std::log(std::max(pt, kLogClamp));
      ++out.selected;
    }
  }
  if (out.selected == 0) return out;
  out.loss = sum / static_cast<double>(out.selected);
  const T scale = static_cast<T>(1.0 / static_cast<double>(out.selected));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t p = 0; p < per; ++p) {
      if (!selected_at(i, p)) continue;
      const std::size_t base = (i * per + p) * y;
      for (int k = 0; k < y; ++k) out.grad_logits.data[base + k] = probs.data[base + k] * scale;
      out.grad_logits.data[base + targets[i].entries[p]] -= scale;
    }
  }
  return out;
}

struct OverlapScore {
  double iou = 0.0;
  double dice = 0.0;
};

/// Binary overlap of one category; both scores are 1 when the category is
/// absent from prediction and truth alike.
inline OverlapScore iou_dice(const LabelMap& pred, const LabelMap& truth, int category) {
  require_same_extent(pred, truth, "iou_dice");
  std::size_t np = 0, nt = 0, both = 0;
  for (std::size_t p = 0; p < pred.pixel_count(); ++p) {
    const bool a = pred.entries[p] == category;
    const bool b = truth.entries[p] == category;
    np += a;
    nt += b;
    both += a && b;
  }
  if (np == 0 && nt == 0) return {1.0, 1.0};
  const double uni = static_cast<double>(np + nt - both);
  return {static_cast<double>(both) / uni, 2.0 * static_cast<double>(both) / static_cast<double>(np + nt)};
}

/// Per-category scores averaged over images. The foreground average skips
/// category 0.
struct SegmentationSummary {
  std::vector<double> iou;
  std::vector<double> dice;
  std::size_t images = 0;

  double foreground_iou() const { return foreground_mean(iou); }
  double foreground_dice() const { return foreground_mean(dice); }

 private:
  static double foreground_mean(const std::vector<double>& v) {
    if (v.size() < 2) return v.empty() ? 0.0 : v[0];
    double s = 0.0;
    for (std::size_t k = 1; k < v.size(); ++k) s += v[k];
    return s / static_cast<double>(v.size() - 1);
  }
};

class ScoreAccumulator {
 public:
  explicit ScoreAccumulator(int num_categories) : iou_(num_categories, 0.0), dice_(num_categories, 0.0) {}

  void add(const LabelMap& pred, const LabelMap& truth) {
    for (std::size_t k = 0; k < iou_.size(); ++k) {
      const auto s = iou_dice(pred, truth, static_cast<int>(k));
      iou_[k] += s.iou;
      dice_[k] += s.dice;
    }
    ++images_;
  }

  SegmentationSummary summary() const {
    SegmentationSummary out{iou_, dice_, images_};
    if (images_ > 0) {
      for (auto& v : out.iou) v /= static_cast<double>(images_);
      for (auto& v : out.dice) v /= static_cast<double>(images_);
    }
    return out;
  }

 private:
  std::vector<double> iou_, dice_;
  std::size_t images_ = 0;
};

}  // namespace denoise_seg
