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

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

#include "denoise_seg/error.hpp"

namespace denoise_seg::nn {

enum class Mode { kTrain, kEval };

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense NHWC activation tensor. Viewed as a (N*H*W) x C row-major matrix
/// for per-pixel linear algebra.
template <typename T>
struct Tensor {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n_, int h_, int w_, int c_, T fill = T(0))
      : n(n_), h(h_), w(w_), c(c_), data(static_cast<std::size_t>(n_) * h_ * w_ * c_, fill) {}

  bool empty() const { return data.empty(); }
  std::size_t rows() const { return static_cast<std::size_t>(n) * h * w; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return n == o.n && h == o.h && w == o.w && c == o.c; }

  T& at(int i, int r, int col, int ch) {
    return data[((static_cast<std::size_t>(i) * h + r) * w + col) * c + ch];
  }
  T at(int i, int r, int col, int ch) const {
    return data[((static_cast<std::size_t>(i) * h + r) * w + col) * c + ch];
  }

  T* ptr(int i, int r, int col) { return data.data() + ((static_cast<std::size_t>(i) * h + r) * w + col) * c; }
  const T* ptr(int i, int r, int col) const {
    return data.data() + ((static_cast<std::size_t>(i) * h + r) * w + col) * c;
  }

  Eigen::Map<RowMatrix<T>> mat() { return {data.data(), static_cast<Eigen::Index>(rows()), c}; }
  Eigen::Map<const RowMatrix<T>> mat() const { return {data.data(), static_cast<Eigen::Index>(rows()), c}; }
};

template <typename T>
struct Parameter {
  std::string name;
  std::vector<T> value;
  std::vector<T> grad;
  std::vector<T> velocity;  // optimizer state

  Parameter() = default;
  Parameter(std::string name_, std::size_t size, T fill = T(0))
      : name(std::move(name_)), value(size, fill), grad(size, T(0)), velocity(size, T(0)) {}

  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// Non-trainable state saved with checkpoints (batch-norm running moments).
template <typename T>
struct Buffer {
  std::string name;
  std::vector<T> value;
};

}  // namespace denoise_seg::nn
