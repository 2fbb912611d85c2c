// Copyright 2026 The simnet Authors
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

#include <cstddef>
#include <string>
#include <vector>

#include "simnet/numgrad/nn.hpp"
#include "simnet/numgrad/ops.hpp"
#include "simnet/numgrad/params.hpp"

namespace simnet::enc {

using ng::Mode;
using ng::ParameterStore;
using ng::Tensor;

struct PointEncoderConfig {
  std::size_t dims = 3;
  /// Shared per-point MLP; the last width is the global feature size.
  std::vector<std::size_t> widths{64, 128, 1024};
  /// Learned 3x3 transform of the x, y, z columns (r, g, b bypass it).
  bool use_input_transform = true;
  /// Learned k x k transform of the first per-point feature layer.
  bool use_feature_transform = false;
  /// Weight of the orthogonality penalty on the feature transform.
  double transform_reg_weight = 0.001;
  /// T-Net trunk and head widths.
  std::vector<std::size_t> tnet_widths{64, 128, 256};
  std::vector<std::size_t> tnet_head{128, 64};

  /// Input transform on for 3-D clouds, off for 6-D.
  static PointEncoderConfig defaults(std::size_t dims);
  void validate() const;
};

/// Spatial transformer for k-dimensional point features. The final layer
/// starts at zero, so a fresh T-Net yields exactly the identity.
template <typename T>
class TNet {
 public:
  TNet() = default;
  TNet(ParameterStore<T>& store, const std::string& prefix, std::size_t k,
       const std::vector<std::size_t>& widths, const std::vector<std::size_t>& head);

  /// x [(B*m) x k] -> stacked transforms [(B*k) x k].
  Tensor<T> operator()(const Tensor<T>& x, std::size_t points, Mode mode);

  std::size_t k() const { return k_; }

 private:
  std::size_t k_ = 0;
  std::vector<ng::Linear<T>> trunk_;
  std::vector<ng::BatchNorm<T>> trunk_bn_;
  std::vector<ng::Linear<T>> head_;
  std::vector<ng::BatchNorm<T>> head_bn_;
  ng::Linear<T> out_;
  Tensor<T> identity_;
};

template <typename T>
struct PointEncoding {
  Tensor<T> global;            // [B x widths.back()]
  Tensor<T> input_transform;   // [(B*3) x 3] or undefined
  Tensor<T> feature_transform; // [(B*k) x k] or undefined
  Tensor<T> regularizer;       // scalar, undefined when no feature transform
};

/// PointNet-style encoder: optional input transform, shared per-point
/// Linear+BN+ReLU layers, then a max-pool over each cloud's points.
template <typename T>
class PointEncoder {
 public:
  PointEncoder() = default;
  PointEncoder(ParameterStore<T>& store, const std::string& prefix, PointEncoderConfig cfg);

  /// clouds: B clouds of `points` rows each, stacked as [(B*points) x dims].
  PointEncoding<T> forward(const Tensor<T>& clouds, std::size_t points, Mode mode);

  const PointEncoderConfig& config() const { return cfg_; }
  std::size_t output_size() const { return cfg_.widths.back(); }

 private:
  PointEncoderConfig cfg_;
  TNet<T> input_tnet_;
  TNet<T> feature_tnet_;
  std::vector<ng::Linear<T>> layers_;
  std::vector<ng::BatchNorm<T>> norms_;
};

/// lambda * ||I - A A^T||_F^2 for one k x k matrix (mean over a stack).
template <typename T>
Tensor<T> tnet_regularizer(const Tensor<T>& transforms, std::size_t k, double lambda);

struct ImageEncoderConfig {
  std::size_t input_size = 64;
  std::vector<std::size_t> channels{16, 32, 64, 128};
  std::size_t output_size = 2048;

  void validate() const;
};

/// Compact CNN: conv3x3 -> BN -> ReLU -> 2x2 average pool per block, global
/// average pool, then an affine projection to output_size.
template <typename T>
class ImageEncoder {
 public:
  ImageEncoder() = default;
  ImageEncoder(ParameterStore<T>& store, const std::string& prefix, ImageEncoderConfig cfg);

  /// images NHWC [B x S x S x 3] with values in [0, 1] -> [B x output_size].
  Tensor<T> forward(const Tensor<T>& images, Mode mode);

  const ImageEncoderConfig& config() const { return cfg_; }

 private:
  ImageEncoderConfig cfg_;
  std::vector<ng::Conv2d<T>> convs_;
  std::vector<ng::BatchNorm<T>> norms_;
  ng::Linear<T> proj_;
};

}  // namespace simnet::enc
