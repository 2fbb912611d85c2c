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

#include <string>

#include "simnet/numgrad/ops.hpp"
#include "simnet/numgrad/params.hpp"

namespace simnet::ng {

// Thin parameter-owning wrappers over the ops. Parameters live in a
// ParameterStore under "<prefix>.weight", "<prefix>.bias", ...

template <typename T>
struct Linear {
  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& prefix, std::size_t in, std::size_t out,
         bool with_bias = true)
      : in_features(in), out_features(out) {
    weight = store.add_parameter(prefix + ".weight", {in, out}, Init::kKaimingUniform, in);
    if (with_bias) bias = store.add_parameter(prefix + ".bias", {out}, Init::kZeros);
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, weight, bias); }

  std::size_t in_features = 0;
  std::size_t out_features = 0;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
struct BatchNorm {
  BatchNorm() = default;
  BatchNorm(ParameterStore<T>& store, const std::string& prefix, std::size_t channels,
            BatchNormOptions opts = {})
      : options(opts) {
    gamma = store.add_parameter(prefix + ".gamma", {channels}, Init::kOnes);
    beta = store.add_parameter(prefix + ".beta", {channels}, Init::kZeros);
    running_mean = store.add_buffer(prefix + ".running_mean", {channels}, T(0));
    running_var = store.add_buffer(prefix + ".running_var", {channels}, T(1));
  }

  Tensor<T> operator()(const Tensor<T>& x, Mode mode) {
    return batch_norm(x, gamma, beta, running_mean, running_var, options, mode);
  }

  BatchNormOptions options;
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

template <typename T>
struct Conv2d {
  Conv2d() = default;
  Conv2d(ParameterStore<T>& store, const std::string& prefix, std::size_t in_channels,
         std::size_t out_channels, ConvOptions opts = {})
      : options(opts) {
    const std::size_t fan_in = opts.kernel * opts.kernel * in_channels;
    weight = store.add_parameter(prefix + ".weight", {fan_in, out_channels},
                                 Init::kKaimingUniform, fan_in);
    bias = store.add_parameter(prefix + ".bias", {out_channels}, Init::kZeros);
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, options); }

  ConvOptions options;
  Tensor<T> weight;
  Tensor<T> bias;
};

}  // namespace simnet::ng
