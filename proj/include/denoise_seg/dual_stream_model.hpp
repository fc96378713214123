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

// Dual-stream segmentation network:
//
//   x -> clean encoder -> f_c --+
//                               +-- concat -> fusion -> f_a -> clean classifier -> y_a
//   x -> noisy encoder -> f_n --+
//                          \--------------------------> noisy classifier -> y_n
//
// Without fusion the clean classifier reads f_c directly (the fusion output
// has the same depth as f_c, so no adapter is needed). The noisy stream can
// be dropped entirely for single-stream baselines.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "denoise_seg/error.hpp"
#include "denoise_seg/nn/layers.hpp"
#include "denoise_seg/nn/tensor.hpp"
#include "denoise_seg/raster.hpp"
#include "denoise_seg/rng.hpp"

namespace denoise_seg {

struct ModelConfig {
  int in_channels = 3;
  int num_categories = 3;
  std::array<int, 4> widths{8, 16, 32, 64};
  std::array<int, 4> strides{2, 2, 2, 1};
  int fuse_hidden = 256;
  bool noisy_stream = true;
  bool fusion = true;

  int depth() const { return widths.back(); }
  int output_stride() const { return strides[0] * strides[1] * strides[2] * strides[3]; }

  void validate() const {
    require(in_channels >= 1 && num_categories >= 2, "invalid_config", "bad model input/output sizes");
    for (int w : widths) require(w >= 1, "invalid_config", "encoder widths must be positive");
    for (int s : strides) require(s == 1 || s == 2, "invalid_config", "encoder strides must be 1 or 2");
    require(fuse_hidden >= 1, "invalid_config", "fuse_hidden must be positive");
    require(!fusion || noisy_stream, "invalid_config", "fusion requires the noisy stream");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Four 3x3 conv-BN-ReLU stages.
template <typename T>
class Encoder {
 public:
  Encoder(const std::string& name, const ModelConfig& cfg) {
    int in = cfg.in_channels;
    for (int s = 0; s < 4; ++s) {
      stages_.emplace_back(name + ".stage" + std::to_string(s + 1), in, cfg.widths[s], 3, cfg.strides[s]);
      in = cfg.widths[s];
    }
  }

  void init(Rng& rng) {
    for (auto& s : stages_) s.init(rng);
  }

  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Mode mode) {
    nn::Tensor<T> h = stages_[0].forward(x, mode);
    for (std::size_t s = 1; s < stages_.size(); ++s) h = stages_[s].forward(h, mode);
    return h;
  }

  /// Returns the input gradient only when requested.
  nn::Tensor<T> backward(const nn::Tensor<T>& df, bool need_input_grad = false) {
    nn::Tensor<T> g = df;
    for (std::size_t s = stages_.size(); s-- > 1;) g = stages_[s].backward(g);
    return stages_[0].backward(g, need_input_grad);
  }

  void collect(std::vector<nn::Parameter<T>*>& out) {
    for (auto& s : stages_) s.collect(out);
  }
  void collect_buffers(std::vector<nn::Buffer<T>*>& out) {
    for (auto& s : stages_) s.collect_buffers(out);
  }

 private:
  std::vector<nn::ConvBnRelu<T>> stages_;
};

/// Channel concatenation followed by two 1x1 conv-BN-ReLU layers
/// (2D -> hidden -> D).
template <typename T>
class Fusion {
 public:
  Fusion(const std::string& name, const ModelConfig& cfg)
      : depth_(cfg.depth()),
        first_(name + ".layer1", 2 * cfg.depth(), cfg.fuse_hidden, 1, 1),
        second_(name + ".layer2", cfg.fuse_hidden, cfg.depth(), 1, 1) {}

  void init(Rng& rng) {
    first_.init(rng);
    second_.init(rng);
  }

  nn::Tensor<T> forward(const nn::Tensor<T>& f_clean, const nn::Tensor<T>& f_noisy, nn::Mode mode) {
    require(f_clean.n == f_noisy.n && f_clean.h == f_noisy.h && f_clean.w == f_noisy.w, "shape_mismatch",
            "fuse: clean and noisy features are not spatially aligned");
    require(f_clean.c == depth_ && f_noisy.c == depth_, "shape_mismatch", "fuse: feature depth mismatch");
    nn::Tensor<T> cat(f_clean.n, f_clean.h, f_clean.w, 2 * depth_);
    auto m = cat.mat();
    m.leftCols(depth_) = f_clean.mat();
    m.rightCols(depth_) = f_noisy.mat();
    return second_.forward(first_.forward(cat, mode), mode);
  }

  /// Gradients w.r.t. (f_clean, f_noisy).
  std::pair<nn::Tensor<T>, nn::Tensor<T>> backward(const nn::Tensor<T>& d_fused) {
    nn::Tensor<T> dcat = first_.backward(second_.backward(d_fused));
    nn::Tensor<T> dc(dcat.n, dcat.h, dcat.w, depth_), dn(dcat.n, dcat.h, dcat.w, depth_);
    dc.mat() = dcat.mat().leftCols(depth_);
    dn.mat() = dcat.mat().rightCols(depth_);
    return {std::move(dc), std::move(dn)};
  }

  void collect(std::vector<nn::Parameter<T>*>& out) {
    first_.collect(out);
    second_.collect(out);
  }
  void collect_buffers(std::vector<nn::Buffer<T>*>& out) {
    first_.collect_buffers(out);
    second_.collect_buffers(out);
  }

 private:
  int depth_;
  nn::ConvBnRelu<T> first_, second_;
};

/// 1x1 conv head producing logits, bilinearly upsampled to input resolution.
template <typename T>
class Classifier {
 public:
  Classifier(const std::string& name, const ModelConfig& cfg)
      : head_(name + ".head", cfg.depth(), cfg.num_categories, 1, 1, true) {}

  void init(Rng& rng) { head_.init(rng, 1.0); }

  nn::Tensor<T> logits(const nn::Tensor<T>& f, int out_h, int out_w) {
    return resize_.forward(head_.forward(f), out_h, out_w);
  }

  nn::Tensor<T> backward(const nn::Tensor<T>& d_logits) { return head_.backward(resize_.backward(d_logits)); }

  void collect(std::vector<nn::Parameter<T>*>& out) { head_.collect(out); }

 private:
  nn::Conv2d<T> head_;
  nn::BilinearResize<T> resize_;
};

template <typename T>
struct ForwardOutput {
  nn::Tensor<T> clean_logits;  // fused-feature prediction when fusion is on
  nn::Tensor<T> clean_probs;
  nn::Tensor<T> noisy_logits;  // empty without the noisy stream
  nn::Tensor<T> noisy_probs;
};

template <typename T>
class DualStreamModel {
 public:
  explicit DualStreamModel(const ModelConfig& cfg)
      : cfg_((cfg.validate(), cfg)),
        encoder_clean_("encoder_clean", cfg),
        encoder_noisy_("encoder_noisy", cfg),
        fusion_("fuse", cfg),
        classifier_clean_("classifier_clean", cfg),
        classifier_noisy_("classifier_noisy", cfg) {}

  const ModelConfig& config() const { return cfg_; }

  /// Seed-controlled init; each group draws from its own stream.
  void init(std::uint64_t seed) {
    Rng r1 = make_rng(seed, {kInitStream, 1}), r2 = make_rng(seed, {kInitStream, 2}),
        r3 = make_rng(seed, {kInitStream, 3}), r4 = make_rng(seed, {kInitStream, 4}),
        r5 = make_rng(seed, {kInitStream, 5});
    encoder_clean_.init(r1);
    encoder_noisy_.init(r2);
    fusion_.init(r3);
    classifier_clean_.init(r4);
    classifier_noisy_.init(r5);
  }

  nn::Tensor<T> encode_clean(const nn::Tensor<T>& x, nn::Mode mode) {
    check_input(x);
    return encoder_clean_.forward(x, mode);
  }
  nn::Tensor<T> encode_noisy(const nn::Tensor<T>& x, nn::Mode mode) {
    check_input(x);
    require(cfg_.noisy_stream, "invalid_state", "model was built without a noisy stream");
    return encoder_noisy_.forward(x, mode);
  }
  nn::Tensor<T> fuse(const nn::Tensor<T>& f_clean, const nn::Tensor<T>& f_noisy, nn::Mode mode) {
    return fusion_.forward(f_clean, f_noisy, mode);
  }
  nn::Tensor<T> classify_clean(const nn::Tensor<T>& f, int out_h, int out_w) {
    return nn::softmax(classifier_clean_.logits(f, out_h, out_w));
  }
  nn::Tensor<T> classify_noisy(const nn::Tensor<T>& f, int out_h, int out_w) {
    return nn::softmax(classifier_noisy_.logits(f, out_h, out_w));
  }

  ForwardOutput<T> forward(const nn::Tensor<T>& x, nn::Mode mode) {
    check_input(x);
    ForwardOutput<T> out;
    nn::Tensor<T> f_clean = encoder_clean_.forward(x, mode);
    if (cfg_.noisy_stream) {
      nn::Tensor<T> f_noisy = encoder_noisy_.forward(x, mode);
      out.noisy_logits = classifier_noisy_.logits(f_noisy, x.h, x.w);
      out.noisy_probs = nn::softmax(out.noisy_logits);
      if (cfg_.fusion) f_clean = fusion_.forward(f_clean, f_noisy, mode);
    }
    out.clean_logits = classifier_clean_.logits(f_clean, x.h, x.w);
    out.clean_probs = nn::softmax(out.clean_logits);
    return out;
  }

  /// Backpropagates logit gradients from the last forward(). `d_noisy` may be
  /// empty. The noisy encoder receives gradient both from its own head and,
  /// through the fusion layer, from the clean stream.
  void backward(const nn::Tensor<T>& d_clean_logits, const nn::Tensor<T>& d_noisy_logits) {
    nn::Tensor<T> d_feat = classifier_clean_.backward(d_clean_logits);
    if (cfg_.noisy_stream && cfg_.fusion) {
      auto [d_fc, d_fn] = fusion_.backward(d_feat);
      encoder_clean_.backward(d_fc);
      if (!d_noisy_logits.empty()) d_fn.mat() += classifier_noisy_.backward(d_noisy_logits).mat();
      encoder_noisy_.backward(d_fn);
      return;
    }
    encoder_clean_.backward(d_feat);
    if (cfg_.noisy_stream && !d_noisy_logits.empty()) {
      encoder_noisy_.backward(classifier_noisy_.backward(d_noisy_logits));
    }
  }

  /// Named parameter groups: encoder_clean, encoder_noisy, fuse,
  /// classifier_clean, classifier_noisy. Only groups in use are returned.
  std::vector<std::pair<std::string, std::vector<nn::Parameter<T>*>>> parameter_groups() {
    std::vector<std::pair<std::string, std::vector<nn::Parameter<T>*>>> groups;
    auto add = [&](const char* name, auto& module) {
      std::vector<nn::Parameter<T>*> ps;
      module.collect(ps);
      groups.emplace_back(name, std::move(ps));
    };
    add("encoder_clean", encoder_clean_);
    if (cfg_.noisy_stream) add("encoder_noisy", encoder_noisy_);
    if (cfg_.fusion) add("fuse", fusion_);
    add("classifier_clean", classifier_clean_);
    if (cfg_.noisy_stream) add("classifier_noisy", classifier_noisy_);
    return groups;
  }

  std::vector<nn::Parameter<T>*> parameters() {
    std::vector<nn::Parameter<T>*> all;
    for (auto& [name, ps] : parameter_groups()) all.insert(all.end(), ps.begin(), ps.end());
    return all;
  }

  std::vector<nn::Buffer<T>*> buffers() {
    std::vector<nn::Buffer<T>*> out;
    encoder_clean_.collect_buffers(out);
    if (cfg_.noisy_stream) encoder_noisy_.collect_buffers(out);
    if (cfg_.fusion) fusion_.collect_buffers(out);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  Encoder<T>& encoder_clean() { return encoder_clean_; }
  Encoder<T>& encoder_noisy() { return encoder_noisy_; }
  Fusion<T>& fusion() { return fusion_; }
  Classifier<T>& classifier_clean() { return classifier_clean_; }
  Classifier<T>& classifier_noisy() { return classifier_noisy_; }

 private:
  void check_input(const nn::Tensor<T>& x) const {
    require(x.n >= 1 && x.h >= 1 && x.w >= 1, "invalid_shape", "empty model input");
    require(x.c == cfg_.in_channels, "shape_mismatch",
            "model expects " + std::to_string(cfg_.in_channels) + " input channels, got " + std::to_string(x.c));
  }

  ModelConfig cfg_;
  Encoder<T> encoder_clean_;
  Encoder<T> encoder_noisy_;
  Fusion<T> fusion_;
  Classifier<T> classifier_clean_;
  Classifier<T> classifier_noisy_;
};

/// Stacks images into an NHWC batch.
template <typename T>
nn::Tensor<T> make_batch(const std::vector<const Image*>& images) {
  require(!images.empty(), "invalid_argument", "empty batch");
  const Image& first = *images.front();
  nn::Tensor<T> x(static_cast<int>(images.size()), first.height, first.width, first.channels);
  const std::size_t per = first.values.size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    require(images[i]->height == first.height && images[i]->width == first.width &&
                images[i]->channels == first.channels,
            "shape_mismatch", "batch images must share one shape");
    std::copy(images[i]->values.begin(), images[i]->values.end(), x.data.begin() + i * per);
  }
  return x;
}

/// Probability map of image `index` within an NHWC probability tensor.
template <typename T>
BasicProbMap<T> prob_map_at(const nn::Tensor<T>& probs, int index) {
  BasicProbMap<T> out(probs.h, probs.w, probs.c);
  const std::size_t per = out.values.size();
  std::copy(probs.data.begin() + index * per, probs.data.begin() + (index + 1) * per, out.values.begin());
  return out;
}

}  // namespace denoise_seg
