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
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "simnet/numgrad/params.hpp"

namespace simnet::ng {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;
  /// Off: L2 term added to the gradient before the moments (classic Adam).
  /// On: decay applied directly to the weights (AdamW).
  bool decoupled = false;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<T>> m;
  std::map<std::string, std::vector<T>> v;
};

/// One bias-corrected Adam update of every trainable entry in `store`.
template <typename T>
void adam_step(ParameterStore<T>& store, AdamState<T>& state, double lr);

/// base_lr * gamma^floor(epoch / step_size); defaults give -30% every 20 epochs.
double step_lr(std::size_t epoch, double base_lr, std::size_t step_size = 20, double gamma = 0.7);

}  // namespace simnet::ng
