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

#include <span>
#include <string>

#include "simnet/numgrad/ops.hpp"

namespace simnet::ng {

enum class LayerKind {
  kAffine,
  kRelu,
  kSigmoid,
  kSoftmax,
  kBatchNorm,
  kDropout,
  kConv2d,
  kGlobalAvgPool,
  kSetMaxPool,
  kConcat,
};

std::string to_string(LayerKind kind);

/// Declarative description of one layer. Trainable tensors are passed to
/// forward() as extra inputs:
///   affine     {x, weight[in x out], bias[out]}
///   conv2d     {x NHWC, weight[(k*k*C) x O], bias[O]}
///   batchnorm  {x, gamma, beta, running_mean, running_var}
///   concat     {parts...}
///   others     {x}
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  ConvOptions conv;
  double dropout_rate = 0.3;
  BatchNormOptions batchnorm;
  /// Rows per set for set_max_pool; 0 pools all rows into one set.
  std::size_t set_size = 0;

  static LayerSpec affine(std::size_t in, std::size_t out) {
    LayerSpec s;
    s.kind = LayerKind::kAffine;
    s.fan_in = in;
    s.fan_out = out;
    return s;
  }
  static LayerSpec of(LayerKind kind) {
    LayerSpec s;
    s.kind = kind;
    return s;
  }

  /// Throws ContractError on out-of-range hyperparameters.
  void validate() const;
};

/// `rng` is required only for dropout in train mode.
template <typename T>
Tensor<T> forward(const LayerSpec& layer, std::span<Tensor<T>> inputs, Mode mode,
                  Rng* rng = nullptr);

}  // namespace simnet::ng
