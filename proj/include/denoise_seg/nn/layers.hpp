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

// Layers with explicit backward passes. Each layer caches what its backward
// pass needs during forward(); backward() must follow the matching forward()
// and accumulates parameter gradients (call zero_grad() between steps).

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "denoise_seg/error.hpp"
#include "denoise_seg/nn/tensor.hpp"
#include "denoise_seg/rng.hpp"

namespace denoise_seg::nn {

/// Square convolution, zero padding (k-1)/2, NHWC, lowered to a GEMM over
/// im2col patches. Weights are (k*k*in) x out, patch order (ky, kx, channel).
template <typename T>
class Conv2d {
 public:
  Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride, bool bias)
      : in_(in_channels),
        out_(out_channels),
        k_(kernel),
        stride_(stride),
        pad_((kernel - 1) / 2),
        has_bias_(bias),
        weight_(name + ".weight", static_cast<std::size_t>(kernel) * kernel * in_channels * out_channels),
        bias_(name + ".bias", bias ? static_cast<std::size_t>(out_channels) : 0) {
    require(in_channels >= 1 && out_channels >= 1 && kernel >= 1 && stride >= 1, "invalid_argument",
            "bad convolution geometry for " + name);
  }

  int out_extent(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

  /// Fan-in scaled normal init; gain 2 for ReLU-followed layers.
  void init(Rng& rng, double gain = 2.0) {
    std::normal_distribution<double> dist(0.0, std::sqrt(gain / (k_ * k_ * in_)));
    for (auto& v : weight_.value) v = static_cast<T>(dist(rng));
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    require(x.c == in_, "shape_mismatch",
            weight_.name + ": expected " + std::to_string(in_) + " input channels, got " + std::to_string(x.c));
    in_h_ = x.h;
    in_w_ = x.w;
    const int oh = out_extent(x.h);
    const int ow = out_extent(x.w);
    const Eigen::Index patch = static_cast<Eigen::Index>(k_) * k_ * in_;
    cols_.resize(static_cast<Eigen::Index>(x.n) * oh * ow, patch);
    T* dst = cols_.data();
    for (int i = 0; i < x.n; ++i) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            for (int kx = 0; kx < k_; ++kx, dst += in_) {
              const int ix = ox * stride_ - pad_ + kx;
              if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) {
                std::fill(dst, dst + in_, T(0));
              } else {
                std::memcpy(dst, x.ptr(i, iy, ix), sizeof(T) * in_);
              }
            }
          }
        }
      }
    }
    Tensor<T> y(x.n, oh, ow, out_);
    y.mat().noalias() = cols_ * weights();
    if (has_bias_) y.mat().rowwise() += bias_row();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad = true) {
    require(dy.rows() == static_cast<std::size_t>(cols_.rows()) && dy.c == out_, "shape_mismatch",
            weight_.name + ": gradient shape does not match the last forward pass");
    Eigen::Map<RowMatrix<T>> dw(weight_.grad.data(), static_cast<Eigen::Index>(k_) * k_ * in_, out_);
    dw.noalias() += cols_.transpose() * dy.mat();
    if (has_bias_) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(bias_.grad.data(), out_);
      db += dy.mat().colwise().sum();
    }
    if (!need_input_grad) return {};
    RowMatrix<T> dcols = dy.mat() * weights().transpose();
    Tensor<T> dx(dy.n, in_h_, in_w_, in_);
    const T* src = dcols.data();
    for (int i = 0; i < dy.n; ++i) {
      for (int oy = 0; oy < dy.h; ++oy) {
        for (int ox = 0; ox < dy.w; ++ox) {
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            for (int kx = 0; kx < k_; ++kx, src += in_) {
              const int ix = ox * stride_ - pad_ + kx;
              if (iy < 0 || iy >= in_h_ || ix < 0 || ix >= in_w_) continue;
              T* d = dx.ptr(i, iy, ix);
              for (int ch = 0; ch < in_; ++ch) d[ch] += src[ch];
            }
          }
        }
      }
    }
    return dx;
  }

  void collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
  }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  Eigen::Map<const RowMatrix<T>> weights() const {
    return {weight_.value.data(), static_cast<Eigen::Index>(k_) * k_ * in_, out_};
  }
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias_row() const { return {bias_.value.data(), out_}; }

  int in_, out_, k_, stride_, pad_;
  bool has_bias_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  RowMatrix<T> cols_;
  int in_h_ = 0, in_w_ = 0;
};

/// Per-channel batch normalization. Training mode normalizes with batch
/// statistics (biased variance) and updates running moments; evaluation mode
/// uses the running moments only.
template <typename T>
class BatchNorm {
 public:
  using RowVec = Eigen::Array<T, 1, Eigen::Dynamic>;

  BatchNorm(const std::string& name, int channels, double momentum = 0.1, double eps = 1e-5)
      : channels_(channels),
        momentum_(static_cast<T>(momentum)),
        eps_(static_cast<T>(eps)),
        gamma_(name + ".gamma", channels, T(1)),
        beta_(name + ".beta", channels, T(0)),
        running_mean_{name + ".running_mean", std::vector<T>(channels, T(0))},
        running_var_{name + ".running_var", std::vector<T>(channels, T(1))} {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    require(x.c == channels_, "shape_mismatch", gamma_.name + ": channel mismatch");
    mode_ = mode;
    const auto xa = x.mat().array();
    const auto m = static_cast<Eigen::Index>(x.rows());
    RowVec mean(channels_), var(channels_);
    if (mode == Mode::kTrain) {
      mean = xa.colwise().mean();
      var = (xa.rowwise() - mean).square().colwise().mean();
      Eigen::Map<RowVec> rm(running_mean_.value.data(), channels_);
      Eigen::Map<RowVec> rv(running_var_.value.data(), channels_);
      const T unbias = m > 1 ? static_cast<T>(m) / static_cast<T>(m - 1) : T(1);
      rm = (T(1) - momentum_) * rm + momentum_ * mean;
      rv = (T(1) - momentum_) * rv + momentum_ * var * unbias;
    } else {
      mean = Eigen::Map<const RowVec>(running_mean_.value.data(), channels_);
      var = Eigen::Map<const RowVec>(running_var_.value.data(), channels_);
    }
    invstd_ = (var + eps_).rsqrt();
    xhat_.resize(m, channels_);
    xhat_.array() = (xa.rowwise() - mean).rowwise() * invstd_;
    Tensor<T> y(x.n, x.h, x.w, x.c);
    y.mat().array() = (xhat_.array().rowwise() * gamma()).rowwise() + beta();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const auto dya = dy.mat().array();
    const auto m = static_cast<T>(dy.rows());
    const RowVec dgamma = (dya * xhat_.array()).colwise().sum();
    const RowVec dbeta = dya.colwise().sum();
    Eigen::Map<RowVec>(gamma_.grad.data(), channels_) += dgamma;
    Eigen::Map<RowVec>(beta_.grad.data(), channels_) += dbeta;
    Tensor<T> dx(dy.n, dy.h, dy.w, dy.c);
    const RowVec scale = gamma() * invstd_;
    if (mode_ == Mode::kTrain) {
      // dx = gamma*invstd/M * (M*dy - sum(dy) - xhat*sum(dy*xhat))
      dx.mat().array() = ((dya * m).rowwise() - dbeta - xhat_.array().rowwise() * dgamma).rowwise() * (scale / m);
    } else {
      dx.mat().array() = dya.rowwise() * scale;
    }
    return dx;
  }

  void collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void collect_buffers(std::vector<Buffer<T>*>& out) {
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }

  Parameter<T>& gamma_param() { return gamma_; }

 private:
  Eigen::Map<const RowVec> gamma() const { return {gamma_.value.data(), channels_}; }
  Eigen::Map<const RowVec> beta() const { return {beta_.value.data(), channels_}; }

  int channels_;
  T momentum_, eps_;
  Parameter<T> gamma_, beta_;
  Buffer<T> running_mean_, running_var_;
  Mode mode_ = Mode::kTrain;
  RowMatrix<T> xhat_;
  RowVec invstd_;
};

template <typename T>
class Relu {
 public:
  Tensor<T> forward(Tensor<T> x) {
    for (auto& v : x.data) v = std::max(v, T(0));
    y_ = x;
    return x;
  }

  Tensor<T> backward(Tensor<T> dy) const {
    for (std::size_t i = 0; i < dy.data.size(); ++i) {
      if (!(y_.data[i] > T(0))) dy.data[i] = T(0);
    }
    return dy;
  }

 private:
  Tensor<T> y_;
};

/// conv (no bias) -> batch norm -> ReLU.
template <typename T>
class ConvBnRelu {
 public:
  ConvBnRelu(const std::string& name, int in_channels, int out_channels, int kernel, int stride)
      : conv_(name + ".conv", in_channels, out_channels, kernel, stride, false), bn_(name + ".bn", out_channels) {}

  void init(Rng& rng) { conv_.init(rng); }
  int out_extent(int in) const { return conv_.out_extent(in); }
  int out_channels() const { return conv_.out_channels(); }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) { return relu_.forward(bn_.forward(conv_.forward(x), mode)); }

  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad = true) {
    return conv_.backward(bn_.backward(relu_.backward(dy)), need_input_grad);
  }

  void collect(std::vector<Parameter<T>*>& out) {
    conv_.collect(out);
    bn_.collect(out);
  }
  void collect_buffers(std::vector<Buffer<T>*>& out) { bn_.collect_buffers(out); }

 private:
  Conv2d<T> conv_;
  BatchNorm<T> bn_;
  Relu<T> relu_;
};

/// Bilinear resampling with half-pixel centers (align_corners = false).
template <typename T>
class BilinearResize {
 public:
  Tensor<T> forward(const Tensor<T>& x, int out_h, int out_w) {
    in_h_ = x.h;
    in_w_ = x.w;
    rows_ = axis(x.h, out_h);
    cols_ = axis(x.w, out_w);
    Tensor<T> tmp(x.n, x.h, out_w, x.c);
    for (int i = 0; i < x.n; ++i) {
      for (int r = 0; r < x.h; ++r) {
        for (int ox = 0; ox < out_w; ++ox) {
          const T* a = x.ptr(i, r, cols_.lo[ox]);
          const T* b = x.ptr(i, r, cols_.hi[ox]);
          const T f = cols_.frac[ox];
          T* d = tmp.ptr(i, r, ox);
          for (int ch = 0; ch < x.c; ++ch) d[ch] = (T(1) - f) * a[ch] + f * b[ch];
        }
      }
    }
    Tensor<T> y(x.n, out_h, out_w, x.c);
    const std::size_t line = static_cast<std::size_t>(out_w) * x.c;
    for (int i = 0; i < x.n; ++i) {
      for (int oy = 0; oy < out_h; ++oy) {
        const T* a = tmp.ptr(i, rows_.lo[oy], 0);
        const T* b = tmp.ptr(i, rows_.hi[oy], 0);
        const T f = rows_.frac[oy];
        T* d = y.ptr(i, oy, 0);
        for (std::size_t j = 0; j < line; ++j) d[j] = (T(1) - f) * a[j] + f * b[j];
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) const {
    Tensor<T> dtmp(dy.n, in_h_, dy.w, dy.c);
    const std::size_t line = static_cast<std::size_t>(dy.w) * dy.c;
    for (int i = 0; i < dy.n; ++i) {
      for (int oy = 0; oy < dy.h; ++oy) {
        const T* g = dy.ptr(i, oy, 0);
        T* a = dtmp.ptr(i, rows_.lo[oy], 0);
        T* b = dtmp.ptr(i, rows_.hi[oy], 0);
        const T f = rows_.frac[oy];
        for (std::size_t j = 0; j < line; ++j) {
          a[j] += (T(1) - f) * g[j];
          b[j] += f * g[j];
        }
      }
    }
    Tensor<T> dx(dy.n, in_h_, in_w_, dy.c);
    for (int i = 0; i < dy.n; ++i) {
      for (int r = 0; r < in_h_; ++r) {
        for (int ox = 0; ox < dy.w; ++ox) {
          const T* g = dtmp.ptr(i, r, ox);
          T* a = dx.ptr(i, r, cols_.lo[ox]);
          T* b = dx.ptr(i, r, cols_.hi[ox]);
          const T f = cols_.frac[ox];
          for (int ch = 0; ch < dy.c; ++ch) {
            a[ch] += (T(1) - f) * g[ch];
            b[ch] += f * g[ch];
          }
        }
      }
    }
    return dx;
  }

 private:
  struct Axis {
    std::vector<int> lo, hi;
    std::vector<T> frac;
  };

  static Axis axis(int in, int out) {
    Axis a;
    a.lo.resize(out);
    a.hi.resize(out);
    a.frac.resize(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      double src = std::max(0.0, (o + 0.5) * scale - 0.5);
      int lo = std::min(static_cast<int>(std::floor(src)), in - 1);
      a.lo[o] = lo;
      a.hi[o] = std::min(lo + 1, in - 1);
      a.frac[o] = static_cast<T>(a.hi[o] == lo ? 0.0 : src - lo);
    }
    return a;
  }

  int in_h_ = 0, in_w_ = 0;
  Axis rows_, cols_;
};

/// Row-wise softmax over the channel axis.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> p = logits;
  auto m = p.mat();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return p;
}

}  // namespace denoise_seg::nn
