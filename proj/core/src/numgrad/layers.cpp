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

#include "simnet/numgrad/layers.hpp"

namespace simnet::ng {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kAffine: return "affine";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kSoftmax: return "softmax";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kGlobalAvgPool: return "global_avg_pool";
    case LayerKind::kSetMaxPool: return "set_max_pool";
    case LayerKind::kConcat: return "concat";
  }
  return "unknown";
}

void LayerSpec::validate() const {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ContractError("dropout rate must be in [0, 1), got " + std::to_string(dropout_rate));
  }
  if (!(batchnorm.eps > 0.0)) throw ContractError("batchnorm epsilon must be positive");
  if (kind == LayerKind::kAffine && (fan_in == 0 || fan_out == 0)) {
    throw ContractError("affine layer needs positive fan-in and fan-out");
  }
  if (kind == LayerKind::kConv2d && (conv.kernel == 0 || conv.stride == 0)) {
    throw ContractError("conv2d needs positive kernel and stride");
  }
}

namespace {

template <typename T>
void expect_inputs(const LayerSpec& layer, std::span<Tensor<T>> inputs, std::size_t n) {
  if (inputs.size() != n) {
    throw DimensionError(to_string(layer.kind) + " expects " + std::to_string(n) +
                         " inputs, got " + std::to_string(inputs.size()));
  }
}

}  // namespace

template <typename T>
Tensor<T> forward(const LayerSpec& layer, std::span<Tensor<T>> inputs, Mode mode, Rng* rng) {
  layer.validate();
  for (const auto& in : inputs) {
    if (!in.defined()) throw DimensionError(to_string(layer.kind) + ": undefined input");
    check_finite<T>(in.data(), "layer input");
  }
  switch (layer.kind) {
    case LayerKind::kAffine: {
      expect_inputs(layer, inputs, 3);
      if (inputs[1].rank() != 2 || inputs[1].dim(0) != layer.fan_in ||
          inputs[1].dim(1) != layer.fan_out) {
        throw DimensionError("affine: weight " + shape_str(inputs[1].shape()) +
                             " does not match fan-in/out " + std::to_string(layer.fan_in) + "/" +
                             std::to_string(layer.fan_out));
      }
      return linear(inputs[0], inputs[1], inputs[2]);
    }
    case LayerKind::kRelu:
      expect_inputs(layer, inputs, 1);
      return relu(inputs[0]);
    case LayerKind::kSigmoid:
      expect_inputs(layer, inputs, 1);
      return sigmoid(inputs[0]);
    case LayerKind::kSoftmax:
      expect_inputs(layer, inputs, 1);
      return softmax(inputs[0]);
    case LayerKind::kBatchNorm:
      expect_inputs(layer, inputs, 5);
      return batch_norm(inputs[0], inputs[1], inputs[2], inputs[3], inputs[4], layer.batchnorm,
                        mode);
    case LayerKind::kDropout: {
      expect_inputs(layer, inputs, 1);
      if (mode == Mode::kTrain && layer.dropout_rate > 0.0 && rng == nullptr) {
        throw ContractError("dropout in train mode needs a generator");
      }
      Rng unused(0);
      return dropout(inputs[0], layer.dropout_rate, rng ? *rng : unused, mode);
    }
    case LayerKind::kConv2d:
      expect_inputs(layer, inputs, 3);
      return conv2d(inputs[0], inputs[1], inputs[2], layer.conv);
    case LayerKind::kGlobalAvgPool:
      expect_inputs(layer, inputs, 1);
      return global_avg_pool(inputs[0]);
    case LayerKind::kSetMaxPool:
      expect_inputs(layer, inputs, 1);
      if (inputs[0].rank() != 2) throw DimensionError("set_max_pool expects a 2-D tensor");
      return set_max_pool(inputs[0], layer.set_size ? layer.set_size : inputs[0].dim(0));
    case LayerKind::kConcat:
      if (inputs.empty()) throw DimensionError("concat expects at least one input");
      return concat_cols(std::vector<Tensor<T>>(inputs.begin(), inputs.end()));
  }
  throw ContractError("unknown layer kind");
}

template Tensor<float> forward(const LayerSpec&, std::span<Tensor<float>>, Mode, Rng*);
template Tensor<double> forward(const LayerSpec&, std::span<Tensor<double>>, Mode, Rng*);

}  // namespace simnet::ng
